/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_embedding_free: (a: number, b: number) => void;
export const degreeRadiusCurve: (a: number, b: number) => [number, number, number, number];
export const embeddingScatter: (a: number, b: number, c: number, d: number) => [number, number, number];
export const embedding_spearman: (a: number) => number;
export const embedding_svg: (a: number) => [number, number];
export const normBoundSummary: (a: number, b: number, c: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
