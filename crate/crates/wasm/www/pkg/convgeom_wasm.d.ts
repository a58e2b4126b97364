/* tslint:disable */
/* eslint-disable */

export class Embedding {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Spearman correlation between degree and embedding norm.
     */
    readonly spearman: number;
    readonly svg: string;
}

export function degreeRadiusCurve(beta: number, seed: number): string;

export function embeddingScatter(alpha: number, beta: number, row_normalized: boolean, seed: number): Embedding;

export function normBoundSummary(alpha: number, beta: number, seed: number): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_embedding_free: (a: number, b: number) => void;
    readonly degreeRadiusCurve: (a: number, b: number) => [number, number, number, number];
    readonly embeddingScatter: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly embedding_spearman: (a: number) => number;
    readonly embedding_svg: (a: number) => [number, number];
    readonly normBoundSummary: (a: number, b: number, c: number) => [number, number, number, number];
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
