/* tslint:disable */
/* eslint-disable */

/**
 * `[r_switch, gap]`: the radius where evaluation moves from the series to the
 * closed form, and the relative difference of the two branches there.
 */
export function gtilde_branch_gap(kappa: number, eta: number): Float64Array;

/**
 * Samples of G̃(r) on (0, r_max]: flat `[r, re, im, ...]`.
 */
export function gtilde_profile(kappa: number, eta: number, r_max: number, n: number): Float64Array;

/**
 * JSON summary of the ball mesh at `level` (0..=2).
 */
export function mesh_stats(level: number): string;

/**
 * Coupled solve with point-source data on the coarse ball; JSON errors.
 */
export function transmission(kappa: number, eta: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly gtilde_branch_gap: (a: number, b: number) => [number, number, number, number];
    readonly gtilde_profile: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mesh_stats: (a: number) => [number, number, number, number];
    readonly transmission: (a: number, b: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
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
