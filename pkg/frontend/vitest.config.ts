import { defineConfig } from "vitest/config";

export default defineConfig({
    test: {
        include: ["test/**/*.test.ts"],
        testTimeout: 20_000,
        hookTimeout: 90_000,
        pool: "forks",
    },
});
