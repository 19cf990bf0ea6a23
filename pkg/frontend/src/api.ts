/** Thin typed client for the case service HTTP/JSON API.
 *
 * The UI consumes this API exclusively; it never computes measurements
 * locally.
 */

export interface Landmark {
  id: string;
  x: number;
  y: number;
  confidence: number | null;
  provenance: "auto" | "manual";
}

export interface Measurement {
  id: string;
  value: number | null;
  units: string;
  status: string;
  inputs_manual: boolean;
}

export interface LandmarksPayload {
  landmarks: Landmark[];
  missing: string[];
  status?: string;
}

export interface ReportJson extends LandmarksPayload {
  case_id: string;
  created_at: string;
  pixel_spacing_mm: number | null;
  measurements: Measurement[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

type FetchLike = typeof fetch;

export class CaseApi {
  constructor(
    readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = await response.json();
        detail = body.detail ?? body.error ?? detail;
      } catch {
        /* non-JSON error body */
      }
      throw new ApiError(response.status, String(detail));
    }
    return response;
  }

  async createCase(file: Blob, filename: string, pixelSpacingMm?: number): Promise<string> {
    const form = new FormData();
    form.append("image", file, filename);
    if (pixelSpacingMm !== undefined) {
      form.append("pixel_spacing_mm", String(pixelSpacingMm));
    }
    const response = await this.request("/cases", { method: "POST", body: form });
    return (await response.json()).case_id as string;
  }

  async decodeCase(caseId: string): Promise<LandmarksPayload> {
    const response = await this.request(`/cases/${caseId}/decode`, { method: "POST" });
    return response.json();
  }

  async getLandmarks(caseId: string): Promise<LandmarksPayload> {
    const response = await this.request(`/cases/${caseId}/landmarks`);
    return response.json();
  }

  async putLandmark(
    caseId: string,
    landmarkId: string,
    x: number,
    y: number,
  ): Promise<{ measurements: Measurement[] }> {
    const response = await this.request(`/cases/${caseId}/landmarks/${landmarkId}`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ x, y }),
    });
    return response.json();
  }

  async getReportJson(caseId: string): Promise<ReportJson> {
    const response = await this.request(`/cases/${caseId}/report?format=json`);
    return response.json();
  }

  async getReportCsv(caseId: string): Promise<string> {
    const response = await this.request(`/cases/${caseId}/report?format=csv`);
    return response.text();
  }

  overlayUrl(caseId: string): string {
    return `${this.baseUrl}/cases/${caseId}/overlay.png`;
  }
}
