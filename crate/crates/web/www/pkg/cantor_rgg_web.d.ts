/* tslint:disable */
/* eslint-disable */

/**
 * Cantor CDF on `resolution` evenly spaced points of `[0, 1]`.
 */
export function cdf_curve(phi: string, resolution: number): Float64Array;

/**
 * `rho_n = a_n n^(1/d) / C(phi)` for `n = 1..=n_max`.
 */
export function rho_sequence(phi: string, n_max: number): Float64Array;

/**
 * Histogram of `n` sampled points over `bins` equal bins.
 */
export function sample_histogram(phi: string, n: number, bins: number, seed: bigint): Uint32Array;

/**
 * `1 - 2 phi`, the limit of the threshold.
 */
export function threshold_limit(phi: string): number;

/**
 * Flattened `(k, R_k)` pairs for growing prefixes of one sample.
 */
export function threshold_trace(phi: string, n_max: number, seed: bigint): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly cdf_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly rho_sequence: (a: number, b: number, c: number) => [number, number, number, number];
    readonly sample_histogram: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
    readonly threshold_limit: (a: number, b: number) => [number, number, number];
    readonly threshold_trace: (a: number, b: number, c: number, d: bigint) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
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
