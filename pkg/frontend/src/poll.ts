import type { ApiClient } from './api';
import type { SessionStatus, SessionSummary } from './types';

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onTick?: (session: SessionSummary) => void;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

/**
 * Poll a session until it leaves the solving state. Resolves on the target
 * status, rejects when the session reports an error or the timeout passes.
 */
export async function pollUntil(
  api: ApiClient,
  sessionId: string,
  want: SessionStatus,
  opts: PollOptions = {},
): Promise<SessionSummary> {
  const interval = opts.intervalMs ?? 750;
  const deadline = Date.now() + (opts.timeoutMs ?? 10 * 60 * 1000);
  const sleep = opts.sleep ?? defaultSleep;
  for (;;) {
    const session = await api.session(sessionId);
    opts.onTick?.(session);
    if (session.status === want) return session;
    if (session.status === 'error') {
      throw new Error(session.error ?? 'solve failed');
    }
    if (Date.now() > deadline) {
      throw new Error(`timed out waiting for session to reach ${want}`);
    }
    await sleep(interval);
  }
}
