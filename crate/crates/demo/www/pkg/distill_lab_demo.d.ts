/* tslint:disable */
/* eslint-disable */

/**
 * Majority-vote accuracy of k = 1, 3, ..., max_k independent teachers that
 * are each right with probability `p`, as JSON `{k, accuracy}`.
 */
export function ensemble_curve(p: number, max_k: number): string;

/**
 * Expected clean error of the majority rule for m = 0..=max_m at
 * γ = sqrt(ln(4/3)/(2M)), as JSON `{gamma, m, error}`.
 */
export function lower_bound_curve(big_m: number, max_m: number): string;

/**
 * Spline values, spline signs and 1-NN labels on `points` evenly spaced
 * grid points over [lo, hi], as JSON `{x, spline, sign, nn}`.
 */
export function spline_vs_nn(xs: Float64Array, labels: Uint8Array, lo: number, hi: number, points: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly ensemble_curve: (a: number, b: number) => [number, number, number, number];
    readonly lower_bound_curve: (a: number, b: number) => [number, number, number, number];
    readonly spline_vs_nn: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
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
