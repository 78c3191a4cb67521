/* tslint:disable */
/* eslint-disable */

/**
 * Rows `β, S_c(φ+βψ) − S_c(φ), β²⟨S''ψ,ψ⟩/2` for each `β`.
 */
export function action_scan(sigma: number, c: number, radius: number, betas: Float64Array): Float64Array;

/**
 * Rows `x, ϕ(x), Re φ(x), Im φ(x)` on `n` nodes of `[−L, L)`.
 */
export function profile_curves(sigma: number, c: number, half_width: number, n: number): Float64Array;

/**
 * Rows `R, μ, ν, ⟨S''ψ,ψ⟩` for each radius.
 */
export function radius_table(sigma: number, c: number, radii: Float64Array): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly action_scan: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly profile_curves: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly radius_table: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
