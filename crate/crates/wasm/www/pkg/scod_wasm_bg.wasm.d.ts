/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const compare_selectors: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const fit_likelihood_ratio: (a: number, b: number, c: number) => [number, number, number, number];
export const selector_map: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
