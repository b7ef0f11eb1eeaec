import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // parity cases run the full default-width pipeline twice
    testTimeout: 180_000,
    hookTimeout: 180_000,
  },
});
