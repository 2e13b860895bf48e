/**
 * Enrollment, login, and identification flows.
 *
 * A flow owns the collected drawings and the conversation with the
 * service; the UI layer only feeds it encoded trajectories and renders
 * the returned state.  No decision is ever produced locally: every
 * accept/reject/account answer comes from a server response.
 */

import { ServiceClient } from "./client.js";

export const REQUIRED_REPETITIONS = 5;

export interface EnrollProgress {
  idCount: number;
  passcodeCount: number;
  ready: boolean;
}

export class EnrollFlow {
  private idSignals: string[] = [];
  private passcodeSignals: string[] = [];

  constructor(private readonly client: ServiceClient) {}

  addIdSignal(encoded: string): EnrollProgress {
    if (this.idSignals.length >= REQUIRED_REPETITIONS) {
      throw new Error("ID repetitions already complete");
    }
    this.idSignals.push(encoded);
    return this.progress();
  }

  addPasscodeSignal(encoded: string): EnrollProgress {
    if (this.passcodeSignals.length >= REQUIRED_REPETITIONS) {
      throw new Error("passcode repetitions already complete");
    }
    this.passcodeSignals.push(encoded);
    return this.progress();
  }

  progress(): EnrollProgress {
    return {
      idCount: this.idSignals.length,
      passcodeCount: this.passcodeSignals.length,
      ready:
        this.idSignals.length === REQUIRED_REPETITIONS &&
        this.passcodeSignals.length === REQUIRED_REPETITIONS,
    };
  }

  /** Rejects locally until all 5 + 5 repetitions are captured. */
  async submit() {
    if (!this.progress().ready) {
      throw new Error(
        `need ${REQUIRED_REPETITIONS} ID and ${REQUIRED_REPETITIONS} passcode drawings before submitting`,
      );
    }
    return this.client.register(this.idSignals, this.passcodeSignals);
  }
}

export async function loginFlow(
  client: ServiceClient,
  accountNumber: string,
  encodedPasscode: string,
) {
  return client.authenticate(accountNumber, encodedPasscode);
}

export async function identifyFlow(client: ServiceClient, encodedId: string, k?: number) {
  return client.identify(encodedId, k);
}
