/* tslint:disable */
/* eslint-disable */

/**
 * A generated 2-D mixture held on the Rust side.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * JSON array of snapshots, one per outer iteration.
     */
    bwkm(k: number, seed: number, max_outer: number): string;
    /**
     * JSON array of error-against-distances curves.
     */
    compare(k: number, seed: number): string;
    constructor(n: number, components: number, separation: number, seed: number);
    /**
     * Flat `x0, y0, x1, y1, ...`.
     */
    points(): Float64Array;
}

/**
 * JSON [`Probe`] for a box and flat centroid coordinates.
 */
export function probe(lower: Float64Array, upper: Float64Array, centroids: Float64Array): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_bwkm: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly demo_compare: (a: number, b: number, c: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly demo_points: (a: number) => [number, number];
    readonly probe: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
