import { SpotClient } from "./api.js";
import { GridApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const client = new SpotClient("");
const app = new GridApp(root, client, {
	onSessionChange(sessionId) {
		const url = new URL(window.location.href);
		if (sessionId) url.searchParams.set("session", sessionId);
		else url.searchParams.delete("session");
		window.history.replaceState(null, "", url.toString());
	},
});

const existing = new URL(window.location.href).searchParams.get("session");
if (existing) void app.restore(existing);
