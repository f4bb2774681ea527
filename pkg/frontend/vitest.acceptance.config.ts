import { defineConfig } from "vitest/config";

// Round-trip suite against a live server; EXPLORER_API must point at it.
export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/acceptance.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});
