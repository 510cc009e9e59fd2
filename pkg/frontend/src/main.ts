import { CollaborativeEditor } from "./editor.js";

function required(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el;
}

const params = new URLSearchParams(window.location.search);
const docId = params.get("doc") ?? "demo";
const user = params.get("user") ?? `web-${Math.floor(Math.random() * 10000)}`;
const ws = params.get("ws") ?? `ws://${window.location.hostname}:7891`;

document.title = `redsys – ${docId}`;
new CollaborativeEditor({
  url: ws,
  docId,
  user,
  input: required("input") as HTMLTextAreaElement,
  overlay: required("overlay"),
  reading: required("reading"),
  status: required("status"),
  menu: required("menu"),
});
