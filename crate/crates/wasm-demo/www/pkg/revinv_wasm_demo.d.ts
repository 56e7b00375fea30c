/* tslint:disable */
/* eslint-disable */

/**
 * A solved model held between calls from the page.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    boundaries(): string;
    /**
     * Solves the boundaries for the given market constants, with
     * `f_C = 1` and marginal profit `y^{-1/2}`.
     */
    constructor(mu_c: number, sigma_c: number, mu_f: number, c_plus: number, c_minus: number, horizon: number, n_steps: number);
    /**
     * One capacity path from time 0, kept in the band by minimal investment
     * and disinvestment.
     */
    reflected_path(y: number, seed: bigint, dt: number): string;
    /**
     * `v(t, ·)` on `points` log-spaced values in `[y_min, y_max]`.
     */
    value_slice(t: number, y_min: number, y_max: number, points: number): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_boundaries: (a: number) => [number, number, number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly demo_reflected_path: (a: number, b: number, c: bigint, d: number) => [number, number, number, number];
    readonly demo_value_slice: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
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
