// Bounded ring buffer for time series; old samples fall off the front.

export class Ring<T> {
    private buf: T[] = [];

    constructor(readonly capacity: number) {
        if (capacity < 1) throw new Error("ring capacity must be >= 1");
    }

    push(value: T): void {
        this.buf.push(value);
        if (this.buf.length > this.capacity) {
            this.buf.splice(0, this.buf.length - this.capacity);
        }
    }

    get length(): number {
        return this.buf.length;
    }

    at(i: number): T {
        return this.buf[i];
    }

    last(): T | undefined {
        return this.buf[this.buf.length - 1];
    }

    toArray(): T[] {
        return this.buf.slice();
    }

    clear(): void {
        this.buf.length = 0;
    }
}
