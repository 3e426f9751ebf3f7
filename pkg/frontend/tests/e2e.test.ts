// End-to-end refinement flow against a live service instance.
// Gated on SERVICE_URL; scripts/run-e2e.sh starts the service and sets it.
import { describe, expect, it } from "vitest";

import { SpotClient } from "../src/api.js";

const base = process.env.SERVICE_URL;
const live = base ? describe : describe.skip;

function hueDeg(lab: [number, number, number]): number {
	return (Math.atan2(lab[2], lab[1]) * 180 / Math.PI + 360) % 360;
}

function hueDiff(a: number, b: number): number {
	const d = Math.abs(a - b) % 360;
	return Math.min(d, 360 - d);
}

live("live refinement flow", () => {
	it("create -> pick(+4deg, 0) -> confirm lands 4deg from the initial center", async () => {
		const client = new SpotClient(base);
		const health = await client.health();
		expect(health.status).toBe("ok");

		const doc = await client.createSession({ target_lab: [60, 30, -20] });
		expect(doc.grid.cells.length + doc.grid.ragged.length).toBe(49);
		const startHue = hueDeg(doc.grid.center.lab);

		const picked = await client.select(doc.session_id, 4.0, 0.0);
		const newHue = hueDeg(picked.grid.center.lab);
		expect(hueDiff(newHue, startHue + 4.0)).toBeLessThan(0.5);
		expect(Math.abs(picked.grid.center.lab[0] - doc.grid.center.lab[0])).toBeLessThan(0.25);

		const confirmed = await client.confirm(doc.session_id);
		expect(confirmed.final.srgb_hex).toBe(picked.grid.center.srgb_hex);
		expect(hueDiff(hueDeg(confirmed.final.lab), startHue + 4.0)).toBeLessThan(0.5);

		// restore path: state survives on the service
		const restored = await client.getSession(doc.session_id);
		expect(restored.confirmed).toBe(true);
		expect(restored.final?.srgb_hex).toBe(confirmed.final.srgb_hex);
	}, 60_000);

	it("refuses mutation after confirm", async () => {
		const client = new SpotClient(base);
		const doc = await client.createSession({ target_lab: [55, 10, 25] });
		await client.confirm(doc.session_id);
		const err = await client.select(doc.session_id, 4, 0).catch((e) => e);
		expect(err.status).toBe(409);
	}, 60_000);
});
