export type Role = "user" | "system";

export interface QueryResult {
  location_name: string;
  lat: number;
  lon: number;
  image_url: string;
  overlay_url: string;
  flood_fraction: number;
  message: string;
}

export interface SegmentResult {
  image_url: string;
  overlay_url: string;
  flood_fraction: number;
}

export interface ChatMessage {
  role: Role;
  text: string;
  result?: QueryResult;
  error?: boolean;
}
