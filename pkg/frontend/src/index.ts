export * from "./types.js";
export * from "./api.js";
export * from "./state.js";
export * from "./workbench.js";
export * from "./views/source.js";
export * from "./views/overview.js";
export * from "./views/analytical.js";
export * from "./views/collection.js";
