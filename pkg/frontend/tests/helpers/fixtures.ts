// Recorded-response replay: load fixtures captured from the real service
// (scripts/record_fixtures.py) and stub fetch with them, so contract tests
// assert that rendered content equals what the service actually returned.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), "..", "fixtures");

export function fixture(name: string): string {
  return readFileSync(join(FIXTURES, name), "utf-8");
}

export function fixtureJson<T>(name: string): { data: T; sequence: number } {
  return JSON.parse(fixture(name));
}

export interface StubRoute {
  body: string;
  status?: number;
  contentType?: string;
}

export interface RecordedCall {
  method: string;
  url: string;
  headers: Record<string, string>;
  body: string | null;
}

export interface FetchStub {
  calls: RecordedCall[];
  set(key: string, route: StubRoute | string): void;
  install(): void;
}

export function makeFetchStub(routes: Record<string, StubRoute | string>): FetchStub {
  const table = new Map(Object.entries(routes));
  const calls: RecordedCall[] = [];

  const stub = async (input: RequestInfo | URL, init: RequestInit = {}): Promise<Response> => {
    const url = String(input);
    const method = (init.method ?? "GET").toUpperCase();
    const path = url.replace(/^https?:\/\/[^/]+/, "");
    calls.push({
      method,
      url: path,
      headers: Object.fromEntries(
        Object.entries((init.headers as Record<string, string>) ?? {}).map(([k, v]) => [k.toLowerCase(), v]),
      ),
      body: typeof init.body === "string" ? init.body : null,
    });
    const route = table.get(`${method} ${path}`);
    if (route === undefined) {
      throw new Error(`no fixture for ${method} ${path}`);
    }
    const resolved: StubRoute = typeof route === "string" ? { body: route } : route;
    const sequence = (() => {
      try {
        return String(JSON.parse(resolved.body).sequence ?? 0);
      } catch {
        return "0";
      }
    })();
    return new Response(resolved.body, {
      status: resolved.status ?? 200,
      headers: {
        "Content-Type": resolved.contentType ?? "application/json",
        "X-Sequence": sequence,
      },
    });
  };

  return {
    calls,
    set(key, route) {
      table.set(key, route);
    },
    install() {
      globalThis.fetch = stub as typeof fetch;
    },
  };
}

export function queryPath(q: string): string {
  return `/api/requirements?q=${encodeURIComponent(q)}`;
}
