import { defineConfig } from "vitest/config";

// The live e2e test binds the service to this fixed port; pointing the
// simulated browser at the same origin mirrors production (the service
// serves the UI) and keeps happy-dom's CORS checks satisfied.
export const E2E_PORT = 18731;

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: { url: `http://127.0.0.1:${E2E_PORT}` },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 240_000,
    hookTimeout: 120_000,
  },
});
