import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    // integration tests spawn the real session service; give it room
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
