/** Save the exact service bytes as a file (no re-serialization). */

export function triggerDownload(rawBody: string, filename: string, doc: Document = document): void {
  const blob = new Blob([rawBody], { type: "application/json" });
  const url = URL.createObjectURL(blob);
  const anchor = doc.createElement("a");
  anchor.href = url;
  anchor.download = filename;
  doc.body.appendChild(anchor);
  anchor.click();
  anchor.remove();
  URL.revokeObjectURL(url);
}
