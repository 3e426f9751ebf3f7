// Typed client for the spot-color service. Every request in the app goes
// through this module, so the endpoint surface is auditable in one place.

export type LabTriple = [number, number, number];

export interface GridCell {
	hue_offset: number;
	lightness_offset: number;
	lab: LabTriple;
	srgb_hex: string;
	de_to_target: number;
	npac: Record<string, number>;
}

export interface CenterMatch {
	lab: LabTriple;
	npac: Record<string, number>;
	srgb_hex: string;
	de_to_target: number;
	facet?: number;
}

export interface Grid {
	target_lab: LabTriple;
	metric: string;
	n_h: number;
	n_l: number;
	step_h: number;
	step_l: number;
	center: CenterMatch;
	cells: GridCell[];
	ragged: [number, number][];
}

export interface FinalChoice {
	lab: LabTriple;
	npac: Record<string, number>;
	srgb_hex: string;
}

export interface SessionDoc {
	session_id: string;
	target_lab: LabTriple;
	target_srgb_hex: string;
	grid: Grid;
	history_len: number;
	confirmed: boolean;
	final?: FinalChoice;
}

export interface ConfirmDoc {
	session_id: string;
	final: FinalChoice;
}

export interface SessionRequest {
	target_lab?: LabTriple;
	target_hex?: string;
	n_h?: number;
	n_l?: number;
	step_h?: number;
	step_l?: number;
}

export class ApiError extends Error {
	constructor(readonly status: number, message: string) {
		super(message);
	}
}

async function parseError(resp: Response): Promise<never> {
	let message = `service error (${resp.status})`;
	try {
		const body = await resp.json();
		if (body && typeof body.error === "string") message = body.error;
	} catch {
		// non-JSON error body; keep the status message
	}
	throw new ApiError(resp.status, message);
}

export class SpotClient {
	constructor(readonly baseUrl: string = "") {}

	private async post<T>(path: string, body: unknown): Promise<T> {
		const resp = await fetch(this.baseUrl + path, {
			method: "POST",
			headers: { "content-type": "application/json" },
			body: JSON.stringify(body),
		});
		if (!resp.ok) await parseError(resp);
		return resp.json() as Promise<T>;
	}

	private async get<T>(path: string): Promise<T> {
		const resp = await fetch(this.baseUrl + path);
		if (!resp.ok) await parseError(resp);
		return resp.json() as Promise<T>;
	}

	createSession(req: SessionRequest): Promise<SessionDoc> {
		return this.post("/api/spot/session", req);
	}

	select(sessionId: string, hueOffset: number, lightnessOffset: number): Promise<SessionDoc> {
		return this.post(`/api/spot/session/${sessionId}/select`, {
			hue_offset: hueOffset,
			lightness_offset: lightnessOffset,
		});
	}

	confirm(sessionId: string): Promise<ConfirmDoc> {
		return this.post(`/api/spot/session/${sessionId}/confirm`, {});
	}

	getSession(sessionId: string): Promise<SessionDoc> {
		return this.get(`/api/spot/session/${sessionId}`);
	}

	health(): Promise<{ status: string; press_id: string }> {
		return this.get("/api/health");
	}
}
