// Thin fetch wrapper over the geoqa HTTP endpoints; the UI's only data path.

import type { Answer, DatasetInfo, NavigateAction, RegionCollection } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, readonly status: number) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { error?: string };
      if (body.error) detail = body.error;
    } catch {
      // keep the status text
    }
    throw new ApiError(detail, response.status);
  }
  return (await response.json()) as T;
}

export interface Api {
  createSession(): Promise<string>;
  dataset(): Promise<DatasetInfo>;
  regions(level: "state" | "county"): Promise<RegionCollection>;
  query(session: string, text: string): Promise<Answer>;
  navigate(session: string, action: NavigateAction): Promise<Answer>;
  suggestions(session: string): Promise<string[]>;
}

export class ApiClient implements Api {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  async createSession(): Promise<string> {
    const data = await asJson<{ session: string }>(
      await fetch(this.url("/session"), { method: "POST" }),
    );
    return data.session;
  }

  async dataset(): Promise<DatasetInfo> {
    return asJson(await fetch(this.url("/dataset")));
  }

  async regions(level: "state" | "county"): Promise<RegionCollection> {
    return asJson(await fetch(this.url(`/regions/${level}`)));
  }

  async query(session: string, text: string): Promise<Answer> {
    return asJson(
      await fetch(this.url("/query"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ session, text }),
      }),
    );
  }

  async navigate(session: string, action: NavigateAction): Promise<Answer> {
    return asJson(
      await fetch(this.url("/navigate"), {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({ session, action }),
      }),
    );
  }

  async suggestions(session: string): Promise<string[]> {
    const data = await asJson<{ suggestions: string[] }>(
      await fetch(this.url(`/suggestions?session=${encodeURIComponent(session)}`)),
    );
    return data.suggestions;
  }
}
