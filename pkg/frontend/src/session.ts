/** Session driver: owns a session id and mirrors the server's state.
 *
 * All stopping decisions happen server-side; this class only transports
 * outcomes and exposes the latest reply.
 */

import { ApiClient, SessionOptions, SessionState } from "./api.js";

export class SessionController {
  private id: string | null = null;
  private last: SessionState | null = null;

  constructor(private readonly client: ApiClient) {}

  get state(): SessionState | null {
    return this.last;
  }

  get active(): boolean {
    return this.id !== null;
  }

  async start(options: SessionOptions = {}): Promise<SessionState> {
    this.id = await this.client.createSession(options);
    this.last = await this.client.getState(this.id);
    return this.last;
  }

  async record(positive: boolean): Promise<SessionState> {
    if (this.id === null) throw new Error("no session started");
    this.last = await this.client.recordResult(this.id, positive);
    return this.last;
  }

  /** Feed a canned outcome script, stopping early when the rule stops.
   * Returns the final state; `state.stopped` says whether the rule fired
   * before the script ran out.
   */
  async runScript(outcomes: Iterable<boolean>): Promise<SessionState> {
    let state = this.last;
    for (const positive of outcomes) {
      if (state?.stopped) break;
      state = await this.record(positive);
    }
    if (state === null) throw new Error("empty script on an unstarted session");
    return state;
  }

  async refresh(): Promise<SessionState> {
    if (this.id === null) throw new Error("no session started");
    this.last = await this.client.getState(this.id);
    return this.last;
  }
}
