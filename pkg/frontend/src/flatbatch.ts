/**
 * Decoder for the flat sampled-batch wire format (magic "TGFB", version 1).
 *
 * Little-endian layout, no padding between sections:
 *
 *     magic    4 bytes "TGFB"
 *     version  u16
 *     seeds    u64  (= S)
 *     hops     u64  (= H)
 *     nodes    u64  (= N, batch-local id count)
 *     edges    u64  (= E, across all hops)
 *     seed_loc u32 x S        local id of each seed, in seed order
 *     seed_t   f64 x S
 *     node_map u64 x N        local -> global
 *     offsets  u64 x (H+1)    non-decreasing, offsets[H] = E
 *     ends     u32 x 2E       interleaved local (src, dst) pairs
 *     edge_t   f64 x E
 *     edge_id  u64 x E
 *
 * All u64 quantities must fit in Number.MAX_SAFE_INTEGER; decoded ids are
 * plain numbers so downstream code can index arrays without BigInt.
 */

export class BridgeError extends Error {}

export interface EdgeBlock {
  /** batch-local id of the expanded frontier node, per edge */
  src: Uint32Array;
  /** batch-local id of the sampled neighbor, per edge */
  dst: Uint32Array;
  /** edge timestamps */
  t: Float64Array;
  /** event ids in the source graph */
  eid: Float64Array;
}

export interface FlatBatch {
  seedNodes: Float64Array;
  seedTimes: Float64Array;
  seedLocals: Uint32Array;
  nodeMap: Float64Array;
  /** cumulative edge offsets per hop; offsets[hops.length] === numEdges */
  offsets: Float64Array;
  hops: EdgeBlock[];
}

const MAGIC = "TGFB";
const VERSION = 1;
const HEADER_BYTES = 4 + 2 + 4 * 8;

class Cursor {
  constructor(private readonly buf: Buffer, public off = 0) {}

  need(n: number, what: string): void {
    if (this.off + n > this.buf.length) {
      throw new BridgeError(`truncated batch: ${what} needs ${n} bytes at ${this.off}`);
    }
  }

  u16(): number {
    this.need(2, "u16");
    const v = this.buf.readUInt16LE(this.off);
    this.off += 2;
    return v;
  }

  u64(what: string): number {
    this.need(8, what);
    const big = this.buf.readBigUInt64LE(this.off);
    this.off += 8;
    if (big > BigInt(Number.MAX_SAFE_INTEGER)) {
      throw new BridgeError(`${what} ${big} exceeds the safe integer range`);
    }
    return Number(big);
  }

  /** Copy out a section; the copy realigns it for typed-array views. */
  private section(bytes: number, what: string): ArrayBuffer {
    this.need(bytes, what);
    const copy = Uint8Array.prototype.slice.call(this.buf, this.off, this.off + bytes);
    this.off += bytes;
    return copy.buffer;
  }

  u32Array(n: number, what: string): Uint32Array {
    return new Uint32Array(this.section(4 * n, what));
  }

  f64Array(n: number, what: string): Float64Array {
    return new Float64Array(this.section(8 * n, what));
  }

  u64Array(n: number, what: string): Float64Array {
    const bigs = new BigUint64Array(this.section(8 * n, what));
    const out = new Float64Array(n);
    for (let i = 0; i < n; i++) {
      if (bigs[i] > BigInt(Number.MAX_SAFE_INTEGER)) {
        throw new BridgeError(`${what}[${i}] exceeds the safe integer range`);
      }
      out[i] = Number(bigs[i]);
    }
    return out;
  }
}

export function decodeFlatBatch(data: Buffer): FlatBatch {
  if (data.length < HEADER_BYTES) {
    throw new BridgeError(`batch too short: ${data.length} bytes`);
  }
  if (data.toString("latin1", 0, 4) !== MAGIC) {
    throw new BridgeError(`bad batch magic ${data.subarray(0, 4).toString("hex")}`);
  }
  const cur = new Cursor(data, 4);
  const version = cur.u16();
  if (version !== VERSION) {
    throw new BridgeError(`unsupported batch version ${version}`);
  }
  const numSeeds = cur.u64("seed count");
  const numHops = cur.u64("hop count");
  const numNodes = cur.u64("node count");
  const numEdges = cur.u64("edge count");

  const seedLocals = cur.u32Array(numSeeds, "seed locals");
  const seedTimes = cur.f64Array(numSeeds, "seed times");
  const nodeMap = cur.u64Array(numNodes, "node map");
  const offsets = cur.u64Array(numHops + 1, "hop offsets");
  const ends = cur.u32Array(2 * numEdges, "edge endpoints");
  const edgeT = cur.f64Array(numEdges, "edge times");
  const edgeId = cur.u64Array(numEdges, "edge ids");

  if (offsets[numHops] !== numEdges) {
    throw new BridgeError(
      `hop offsets end at ${offsets[numHops]}, expected ${numEdges}`);
  }
  for (let h = 0; h < numHops; h++) {
    if (offsets[h + 1] < offsets[h]) {
      throw new BridgeError(`hop offsets decrease at hop ${h}`);
    }
  }
  for (const local of seedLocals) {
    if (local >= numNodes) {
      throw new BridgeError(`seed local id ${local} outside the node map`);
    }
  }

  const hops: EdgeBlock[] = [];
  for (let h = 0; h < numHops; h++) {
    const lo = offsets[h];
    const hi = offsets[h + 1];
    const src = new Uint32Array(hi - lo);
    const dst = new Uint32Array(hi - lo);
    for (let i = lo; i < hi; i++) {
      src[i - lo] = ends[2 * i];
      dst[i - lo] = ends[2 * i + 1];
    }
    hops.push({
      src,
      dst,
      t: edgeT.slice(lo, hi),
      eid: edgeId.slice(lo, hi),
    });
  }

  const seedNodes = new Float64Array(numSeeds);
  for (let i = 0; i < numSeeds; i++) {
    seedNodes[i] = nodeMap[seedLocals[i]];
  }
  return { seedNodes, seedTimes, seedLocals, nodeMap, offsets, hops };
}

/** The canonical zero-seed batch: no hops, offsets [0], empty arrays. */
export function emptyFlatBatch(): FlatBatch {
  return {
    seedNodes: new Float64Array(0),
    seedTimes: new Float64Array(0),
    seedLocals: new Uint32Array(0),
    nodeMap: new Float64Array(0),
    offsets: new Float64Array([0]),
    hops: [],
  };
}
