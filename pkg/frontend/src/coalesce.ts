export interface CoalescerCallbacks<T> {
    onResult: (value: T, factor: number) => void;
    onError: (error: unknown, factor: number) => void;
}

/**
 * Latest-wins coalescing for stylize requests.
 *
 * At most one request is in flight. Factors requested while one is
 * pending collapse to the newest value, which is sent once the active
 * request settles; responses that were superseded are dropped, so the
 * callbacks only ever see the outcome of the newest factor.
 */
export class StylizeCoalescer<T> {
    private inFlight = false;
    private pending: number | null = null;

    constructor(
        private readonly send: (factor: number) => Promise<T>,
        private readonly callbacks: CoalescerCallbacks<T>,
    ) {}

    get busy(): boolean {
        return this.inFlight;
    }

    request(factor: number): void {
        if (this.inFlight) {
            this.pending = factor;
            return;
        }
        this.fire(factor);
    }

    private fire(factor: number): void {
        this.inFlight = true;
        this.send(factor).then(
            value => this.settle(() => this.callbacks.onResult(value, factor)),
            error => this.settle(() => this.callbacks.onError(error, factor)),
        );
    }

    private settle(deliver: () => void): void {
        this.inFlight = false;
        if (this.pending === null) {
            deliver();
            return;
        }
        const next = this.pending;
        this.pending = null;
        this.fire(next);
    }
}
