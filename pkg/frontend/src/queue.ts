/** In-flight PUT serialization: queue depth 1, latest-wins coalescing
 * per landmark.
 *
 * At most one request is on the wire at any time. While one is in
 * flight, newer submissions are parked; resubmitting the same landmark
 * replaces its parked coordinates (latest wins). Every caller's promise
 * settles with the acknowledgement of the request that actually carried
 * (or superseded) its coordinates.
 */

type Sender<T> = (landmarkId: string, x: number, y: number) => Promise<T>;

interface Parked<T> {
  x: number;
  y: number;
  resolvers: Array<(value: T) => void>;
  rejecters: Array<(reason: unknown) => void>;
}

export class PutQueue<T> {
  private inflight = false;
  private parked = new Map<string, Parked<T>>();

  constructor(private readonly sender: Sender<T>) {}

  /** True while a save is unacknowledged (request in flight or parked). */
  get dirty(): boolean {
    return this.inflight || this.parked.size > 0;
  }

  submit(landmarkId: string, x: number, y: number): Promise<T> {
    return new Promise<T>((resolve, reject) => {
      const entry = this.parked.get(landmarkId);
      if (entry) {
        entry.x = x;
        entry.y = y;
        entry.resolvers.push(resolve);
        entry.rejecters.push(reject);
      } else {
        this.parked.set(landmarkId, {
          x,
          y,
          resolvers: [resolve],
          rejecters: [reject],
        });
      }
      void this.pump();
    });
  }

  private async pump(): Promise<void> {
    if (this.inflight) return;
    const next = this.parked.entries().next();
    if (next.done) return;
    const [landmarkId, entry] = next.value;
    this.parked.delete(landmarkId);
    this.inflight = true;
    try {
      const ack = await this.sender(landmarkId, entry.x, entry.y);
      for (const resolve of entry.resolvers) resolve(ack);
    } catch (reason) {
      for (const reject of entry.rejecters) reject(reason);
    } finally {
      this.inflight = false;
      void this.pump();
    }
  }
}
