import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "happy-dom",
    environmentOptions: {
      happyDOM: {
        url: "http://127.0.0.1/",
        settings: {
          fetch: {
            // integration tests talk to a live local service on a random port
            disableSameOriginPolicy: true,
          },
        },
      },
    },
    include: ["tests/**/*.test.ts"],
    testTimeout: 30000,
    hookTimeout: 30000,
  },
});
