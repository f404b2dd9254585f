import { AnnotationApp } from "./app.js";
import { AnnotationClient } from "./api.js";

const SERVICE_KEY = "kginterp.service";
const ANNOTATOR_KEY = "kginterp.annotator";

function setting(key: string, queryName: string, fallback: string): string {
  const fromQuery = new URLSearchParams(window.location.search).get(queryName);
  if (fromQuery) {
    window.localStorage.setItem(key, fromQuery);
    return fromQuery;
  }
  return window.localStorage.getItem(key) ?? fallback;
}

function bootstrap(): void {
  const root = document.getElementById("app");
  if (root === null) {
    throw new Error("missing #app container");
  }
  const serviceUrl = setting(SERVICE_KEY, "service", "http://127.0.0.1:8400");
  let annotator = setting(ANNOTATOR_KEY, "annotator", "");
  while (!annotator) {
    annotator = window.prompt("annotator name") ?? "";
  }
  window.localStorage.setItem(ANNOTATOR_KEY, annotator);

  const header = document.getElementById("session-line");
  if (header !== null) {
    header.textContent = `${annotator} @ ${serviceUrl}`;
  }
  const app = new AnnotationApp({
    root,
    client: new AnnotationClient(serviceUrl),
    annotator,
  });
  void app.start();
}

bootstrap();
