import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    exclude: process.env.UPLIFT_API ? [] : ["tests/integration/**"],
  },
});
