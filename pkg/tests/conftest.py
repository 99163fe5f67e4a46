import pytest

from gridmga.network import Branch, Bus, Generator, Network, build_substations


def make_net(name, buses, branches, gens, base_mva=100.0):
    buses, branches, gens = tuple(buses), tuple(branches), tuple(gens)
    return Network(name, base_mva, buses, branches, gens,
                   build_substations(buses, branches, gens))


@pytest.fixture
def tri_uncongested():
    """Cheap generator at bus 1, 60 MW load at bus 3, equal reactances,
    ample limits. Analytic flows: 40 MW direct, 20 MW around the loop."""
    return make_net(
        "tri",
        [Bus(1, 135.0, True, 0.0), Bus(2, 135.0, False, 0.0), Bus(3, 135.0, False, 60.0)],
        [Branch(1, 1, 2, 10.0, 100.0), Branch(2, 2, 3, 10.0, 100.0),
         Branch(3, 1, 3, 10.0, 100.0)],
        [Generator(1, 1, 0.0, 200.0, 10.0), Generator(2, 2, 0.0, 200.0, 100.0)],
    )


@pytest.fixture
def tri_congested():
    """The direct line to the load is tight; serving the whole load from the
    cheap generator requires opening it so the loop flow constraint vanishes."""
    return make_net(
        "tri-tight",
        [Bus(1, 135.0, True, 0.0), Bus(2, 135.0, False, 0.0), Bus(3, 135.0, False, 100.0)],
        [Branch(1, 1, 2, 10.0, 100.0), Branch(2, 2, 3, 10.0, 100.0),
         Branch(3, 1, 3, 10.0, 60.0)],
        [Generator(1, 1, 0.0, 200.0, 10.0), Generator(2, 2, 0.0, 200.0, 100.0)],
    )


@pytest.fixture(scope="session")
def case57_net():
    from gridmga.cases import load_case
    return load_case("case57")


@pytest.fixture(scope="session")
def case118_net():
    from gridmga.cases import load_case
    return load_case("case118")


@pytest.fixture(scope="session")
def case57_congested(case57_net):
    from gridmga.network import scale_line_capacities
    return scale_line_capacities(case57_net, 0.7)
