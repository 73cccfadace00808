export interface SessionInfo {
    sessionId: string;
    vertexCount: number;
    faceCount: number;
}

export interface TextureInfo {
    status: string;
    width: number;
    height: number;
}

export interface StylizeInfo {
    magnification: number;
    rms: number;
    vertexCount: number;
}

export interface HealthInfo {
    ok: boolean;
    generator: string;
}

export type MeshKind = 'original' | 'stylized';

/** Error carrying the HTTP status and the server's reason text. */
export class ApiError extends Error {
    constructor(readonly status: number, reason: string) {
        super(reason);
        this.name = 'ApiError';
    }
}

type FetchLike = typeof fetch;

/** Typed client for the studio session API. */
export class StudioClient {
    private readonly baseUrl: string;
    private readonly fetchImpl: FetchLike;

    constructor(baseUrl: string, fetchImpl?: FetchLike) {
        this.baseUrl = baseUrl.replace(/\/+$/, '');
        this.fetchImpl = fetchImpl ?? fetch.bind(globalThis);
    }

    async createSession(obj: string | Blob | Uint8Array<ArrayBuffer>): Promise<SessionInfo> {
        const body = await this.requestJson('/sessions', { method: 'POST', body: obj });
        return {
            sessionId: body.session_id,
            vertexCount: body.vertex_count,
            faceCount: body.face_count,
        };
    }

    async uploadTexture(sessionId: string, png: Blob | Uint8Array<ArrayBuffer>): Promise<TextureInfo> {
        const body = await this.requestJson(`/sessions/${sessionId}/texture`, {
            method: 'POST',
            body: png,
        });
        return {
            status: body.status,
            width: body.heightfield.width,
            height: body.heightfield.height,
        };
    }

    /** Stylize from the original mesh at an absolute magnification factor. */
    async stylize(sessionId: string, magnification: number): Promise<StylizeInfo> {
        const body = await this.requestJson(`/sessions/${sessionId}/stylize`, {
            method: 'POST',
            headers: { 'content-type': 'application/json' },
            body: JSON.stringify({ magnification }),
        });
        return {
            magnification: body.magnification,
            rms: body.rms,
            vertexCount: body.vertex_count,
        };
    }

    async fetchMesh(sessionId: string, which: MeshKind): Promise<string> {
        const response = await this.request(`/sessions/${sessionId}/mesh?which=${which}`);
        return response.text();
    }

    async fetchHeightfield(sessionId: string): Promise<Blob> {
        const response = await this.request(`/sessions/${sessionId}/heightfield`);
        return response.blob();
    }

    async health(): Promise<HealthInfo> {
        const body = await this.requestJson('/health');
        return { ok: body.ok === true, generator: body.generator };
    }

    private async request(path: string, init?: RequestInit): Promise<Response> {
        const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
        if (!response.ok) {
            throw new ApiError(response.status, await this.reasonOf(response));
        }
        return response;
    }

    private async requestJson(path: string, init?: RequestInit) {
        const response = await this.request(path, init);
        return response.json();
    }

    private async reasonOf(response: Response): Promise<string> {
        // error bodies are {schema_version, error}; fall back to the status line
        try {
            const body = await response.json();
            if (body && typeof body.error === 'string') return body.error;
        } catch {
            // not JSON
        }
        return `request failed with status ${response.status}`;
    }
}
