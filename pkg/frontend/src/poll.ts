/** Periodic refresh with backoff. Polls every two seconds while the server
 * answers; doubles the interval on failure up to a ceiling and resets as
 * soon as a poll succeeds again. */

export interface Poller {
  start(): void;
  stop(): void;
  readonly interval: number;
}

export const BASE_INTERVAL_MS = 2000;
export const MAX_INTERVAL_MS = 30000;

export function createPoller(
  tick: () => Promise<void>,
  setTimer: typeof setTimeout = setTimeout,
  clearTimer: typeof clearTimeout = clearTimeout,
): Poller {
  let interval = BASE_INTERVAL_MS;
  let handle: ReturnType<typeof setTimeout> | null = null;
  let running = false;

  const schedule = (): void => {
    if (!running) return;
    handle = setTimer(async () => {
      try {
        await tick();
        interval = BASE_INTERVAL_MS;
      } catch {
        interval = Math.min(interval * 2, MAX_INTERVAL_MS);
      }
      schedule();
    }, interval);
  };

  return {
    start(): void {
      if (running) return;
      running = true;
      schedule();
    },
    stop(): void {
      running = false;
      if (handle !== null) clearTimer(handle);
      handle = null;
    },
    get interval(): number {
      return interval;
    },
  };
}
