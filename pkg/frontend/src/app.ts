// Refinement picker view. All color values rendered here come straight
// from service responses; the client does no color math of its own.

import { ApiError, GridCell, SessionDoc, SpotClient } from "./api.js";

type PendingPick = { hue: number; lightness: number };

export interface AppOptions {
	onSessionChange?: (sessionId: string | null) => void;
}

function el<K extends keyof HTMLElementTagNameMap>(
	tag: K,
	className?: string,
	text?: string,
): HTMLElementTagNameMap[K] {
	const node = document.createElement(tag);
	if (className) node.className = className;
	if (text !== undefined) node.textContent = text;
	return node;
}

export function parseTargetInput(raw: string):
	| { target_lab: [number, number, number] }
	| { target_hex: string }
	| { error: string } {
	const text = raw.trim();
	if (!text) return { error: "enter a target: L,a,b or #rrggbb" };
	if (text.startsWith("#")) {
		if (!/^#[0-9a-fA-F]{6}$/.test(text)) {
			return { error: "hex target must look like #rrggbb" };
		}
		return { target_hex: text.toLowerCase() };
	}
	const parts = text.split(",").map((p) => Number(p.trim()));
	if (parts.length !== 3 || parts.some((v) => !Number.isFinite(v))) {
		return { error: "Lab target must be three numbers: L,a,b" };
	}
	const [L, a, b] = parts;
	if (L < 0 || L > 100) return { error: "L must lie in [0, 100]" };
	if (Math.abs(a) > 200 || Math.abs(b) > 200) {
		return { error: "a and b must lie in [-200, 200]" };
	}
	return { target_lab: [L, a, b] };
}

export function npacSummary(npac: Record<string, number>): string {
	return Object.entries(npac)
		.map(([id, w]) => `NP${id}: ${(w * 100).toFixed(1)}%`)
		.join("  ");
}

export class GridApp {
	readonly root: HTMLElement;
	private session: SessionDoc | null = null;
	private busy = false;
	private pendingPick: PendingPick | null = null;
	private breadcrumb: PendingPick[] = [];

	constructor(
		root: HTMLElement,
		private readonly client: SpotClient,
		private readonly options: AppOptions = {},
	) {
		this.root = root;
		this.renderForm();
	}

	// -- entry points ------------------------------------------------------

	async start(rawTarget: string): Promise<void> {
		const parsed = parseTargetInput(rawTarget);
		if ("error" in parsed) {
			this.showMessage(parsed.error, "validation");
			return;
		}
		await this.guard(async () => {
			const doc = await this.client.createSession(parsed);
			this.session = doc;
			this.breadcrumb = [];
			this.options.onSessionChange?.(doc.session_id);
			this.renderSession();
		});
	}

	async restore(sessionId: string): Promise<void> {
		await this.guard(async () => {
			const doc = await this.client.getSession(sessionId);
			this.session = doc;
			this.breadcrumb = [];
			this.options.onSessionChange?.(doc.session_id);
			this.renderSession();
		});
	}

	async pick(hue: number, lightness: number): Promise<void> {
		if (!this.session || this.session.confirmed) return;
		if (this.busy) {
			this.pendingPick = { hue, lightness }; // keep only the latest pick
			return;
		}
		await this.guard(async () => {
			const doc = await this.client.select(this.session!.session_id, hue, lightness);
			this.session = doc;
			this.breadcrumb.push({ hue, lightness });
			this.renderSession();
		});
		if (this.pendingPick) {
			const next = this.pendingPick;
			this.pendingPick = null;
			await this.pick(next.hue, next.lightness);
		}
	}

	async confirmChoice(): Promise<void> {
		if (!this.session || this.session.confirmed) return;
		await this.guard(async () => {
			const doc = await this.client.confirm(this.session!.session_id);
			this.session = { ...this.session!, confirmed: true, final: doc.final };
			this.renderSession();
		});
	}

	private async guard(fn: () => Promise<void>): Promise<void> {
		this.busy = true;
		try {
			await fn();
		} catch (err) {
			if (err instanceof ApiError && err.status === 409) {
				this.showMessage("session is confirmed; the grid is locked", "locked");
			} else if (err instanceof ApiError) {
				this.showMessage(`service error: ${err.message}`, "service");
			} else {
				this.showMessage(`service unreachable: ${String(err)}`, "service");
			}
		} finally {
			this.busy = false;
		}
	}

	// -- rendering ---------------------------------------------------------

	private renderForm(): void {
		this.root.replaceChildren();
		const form = el("form", "target-form");
		const input = el("input");
		input.type = "text";
		input.name = "target";
		input.placeholder = "L,a,b  or  #rrggbb";
		const button = el("button", "", "match");
		button.type = "submit";
		form.append(input, button);
		form.addEventListener("submit", (ev) => {
			ev.preventDefault();
			void this.start(input.value);
		});
		this.root.append(form, el("div", "message"), el("div", "session-view"));
	}

	private showMessage(text: string, kind: string): void {
		const box = this.root.querySelector<HTMLElement>(".message");
		if (box) {
			box.textContent = text;
			box.dataset.kind = kind;
		}
	}

	private renderSession(): void {
		const view = this.root.querySelector<HTMLElement>(".session-view");
		if (!view || !this.session) return;
		this.showMessage("", "none");
		view.replaceChildren();

		const doc = this.session;
		const header = el("div", "swatch-row");
		header.append(
			this.swatchCard("target", doc.target_srgb_hex, doc.target_lab),
			this.swatchCard("closest match", doc.grid.center.srgb_hex, doc.grid.center.lab,
				doc.grid.center.de_to_target),
		);
		view.append(header);
		view.append(this.renderGrid());
		view.append(this.renderBreadcrumb());

		const actions = el("div", "actions");
		const confirmBtn = el("button", "confirm", doc.confirmed ? "confirmed" : "confirm");
		confirmBtn.disabled = doc.confirmed;
		confirmBtn.addEventListener("click", () => void this.confirmChoice());
		actions.append(confirmBtn);
		view.append(actions);

		if (doc.confirmed && doc.final) {
			view.append(this.renderFinalCard(doc.final.srgb_hex, doc.final.lab, doc.final.npac));
		}
	}

	private swatchCard(label: string, hex: string, lab: number[], de?: number): HTMLElement {
		const card = el("div", "swatch-card");
		const sw = el("div", "swatch");
		sw.style.background = hex;
		sw.dataset.hex = hex;
		const caption = el("div", "caption",
			`${label} ${hex}  L ${lab[0].toFixed(1)} a ${lab[1].toFixed(1)} b ${lab[2].toFixed(1)}`
			+ (de !== undefined ? `  (dE ${de.toFixed(2)})` : ""));
		card.append(sw, caption);
		return card;
	}

	private renderGrid(): HTMLElement {
		const doc = this.session!;
		const grid = doc.grid;
		const byKey = new Map<string, GridCell>();
		for (const cell of grid.cells) {
			byKey.set(`${cell.hue_offset}|${cell.lightness_offset}`, cell);
		}
		const table = el("div", "grid");
		table.style.gridTemplateColumns = `repeat(${2 * grid.n_h + 1}, var(--cell))`;
		if (doc.confirmed) table.classList.add("locked");

		// lightness decreases downward: +n_l row first
		for (let j = grid.n_l; j >= -grid.n_l; j--) {
			for (let i = -grid.n_h; i <= grid.n_h; i++) {
				const cell = byKey.get(`${i * grid.step_h}|${j * grid.step_l}`);
				if (!cell) {
					table.append(el("div", "cell ragged"));
					continue;
				}
				const btn = el("button", "cell");
				btn.style.background = cell.srgb_hex;
				btn.dataset.hex = cell.srgb_hex;
				btn.dataset.hueOffset = String(cell.hue_offset);
				btn.dataset.lightnessOffset = String(cell.lightness_offset);
				btn.title = `dE ${cell.de_to_target.toFixed(2)}`;
				if (i === 0 && j === 0) btn.classList.add("center");
				btn.disabled = doc.confirmed;
				btn.addEventListener("click", () =>
					void this.pick(cell.hue_offset, cell.lightness_offset));
				table.append(btn);
			}
		}
		return table;
	}

	private renderBreadcrumb(): HTMLElement {
		const trail = el("div", "breadcrumb");
		trail.append(el("span", "crumb", "start"));
		for (const step of this.breadcrumb) {
			trail.append(el("span", "crumb",
				`${step.hue >= 0 ? "+" : ""}${step.hue}° / ${step.lightness >= 0 ? "+" : ""}${step.lightness} L*`));
		}
		return trail;
	}

	private renderFinalCard(hex: string, lab: number[], npac: Record<string, number>): HTMLElement {
		const card = el("div", "final-card");
		const sw = el("div", "swatch final");
		sw.style.background = hex;
		sw.dataset.hex = hex;
		const body = el("div", "final-body");
		body.append(
			el("div", "final-hex", hex),
			el("div", "final-lab", `L ${lab[0].toFixed(2)}  a ${lab[1].toFixed(2)}  b ${lab[2].toFixed(2)}`),
			el("div", "final-npac", npacSummary(npac)),
		);
		const copy = el("button", "copy", "copy");
		copy.addEventListener("click", () => {
			void navigator.clipboard?.writeText(`${hex} Lab(${lab.map((v) => v.toFixed(2)).join(", ")})`);
			copy.textContent = "copied";
		});
		card.append(sw, body, copy);
		return card;
	}

	// test hooks
	get state(): SessionDoc | null {
		return this.session;
	}

	get breadcrumbLength(): number {
		return this.breadcrumb.length;
	}
}
