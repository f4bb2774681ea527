import { defineConfig } from "vitest/config";

// Unit tests only. The acceptance suite needs a live server and runs
// through vitest.acceptance.config.ts instead.
export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    exclude: ["tests/acceptance.test.ts", "**/node_modules/**"],
  },
});
