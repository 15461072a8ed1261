/* tslint:disable */
/* eslint-disable */

/**
 * Min-norm advantage at each `γ = p/n`.
 */
export function minnorm_advantage(n: number, dim: number, sigma: number, gammas: Float64Array, draws: number): Float64Array;

/**
 * Ridge advantage at each `γ` for coefficient `lambda`.
 */
export function ridge_advantage(n: number, dim: number, sigma: number, lambda: number, gammas: Float64Array, draws: number): Float64Array;

/**
 * Feature reduction against matched output noise. Returns
 * `[err, adv_features, adv_noise]` triples, flattened, one per `γ`.
 */
export function tradeoff(n: number, dim: number, sigma: number, gammas: Float64Array, draws: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly minnorm_advantage: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly ridge_advantage: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number];
    readonly tradeoff: (a: number, b: number, c: number, d: number, e: number, f: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
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
