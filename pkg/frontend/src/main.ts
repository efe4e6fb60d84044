import { StudyApi } from "./api";
import { StudyFlow } from "./flow";
import { mountApp } from "./render";

// Service base URL: ?api=... wins, then a <meta name="study-api"> tag, then
// same-origin. The page is static, so this is the whole configuration story.
function baseUrl(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery !== null && fromQuery !== "") return fromQuery;
  const meta = document.querySelector('meta[name="study-api"]');
  const fromMeta = meta?.getAttribute("content");
  if (fromMeta != null && fromMeta !== "") return fromMeta;
  return window.location.origin;
}

const root = document.getElementById("app");
if (root === null) throw new Error("missing #app element");
mountApp(root, new StudyFlow(new StudyApi(baseUrl())));
