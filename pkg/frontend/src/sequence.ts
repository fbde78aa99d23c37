// Monotonic sequence numbers per request kind: a response is applied only
// if no newer request of the same kind has been issued since, so slow
// replies can never overwrite fresher state.

export class RequestSequencer {
  private issued = 0;

  issue(): number {
    return ++this.issued;
  }

  isCurrent(seq: number): boolean {
    return seq === this.issued;
  }
}
