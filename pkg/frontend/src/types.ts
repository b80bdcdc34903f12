// Wire shapes (what the control API returns) and the dashboard view model.

export interface SnapshotHost {
  host_id: number;
  name: string;
  subnet: string;
  status: string;
  modules: string[];
  prebuilt: string[];
  isolated: boolean;
}

export interface ActionOutcome {
  action: string;
  status: string;
  detail: string | null;
}

export interface VerificationInfo {
  passed: boolean;
  entries?: number;
  mismatches?: Array<{ src: number; dst: number; port: number; expected: string; observed: string }>;
  vacuous?: boolean;
  [key: string]: unknown;
}

export interface RecordSummary {
  directive_id: number;
  cpcon_level: number;
  threat: string;
  issuer: string;
  status: string;
  actions: ActionOutcome[];
  verification: VerificationInfo | null;
}

export interface RecommendationInfo {
  rec_id: number;
  proposed_level: number;
  threat: string;
  triggering_events: number[];
  state: string;
  created_at: number;
  directive_id: number | null;
}

export interface SnapshotEvent {
  event_id: number;
  event: {
    alert: { host_id: number; event_type: string; observed_at: number };
    cpcon_level: number;
    actions_taken: string[];
  };
  received_at: number;
  seq: number;
  correlation_tags: string[];
  quarantined: boolean;
}

export interface Snapshot {
  cpcon_level: number;
  hosts: SnapshotHost[];
  directives: RecordSummary[];
  pending_recommendations: RecommendationInfo[];
  events: SnapshotEvent[];
  version: number;
}

export interface AuditFrame {
  seq: number;
  ts: number;
  kind: string;
  category: string;
  payload: Record<string, unknown>;
}

// --- view model ------------------------------------------------------------

export interface HostRow {
  hostId: number;
  name: string;
  subnet: string;
  status: string;
  modules: string[];
  prebuilt: string[];
  isolated: boolean;
}

export interface AlertEntry {
  eventId: number;
  hostId: number;
  eventType: string;
  cpconLevel: number;
  actionsTaken: string[];
  ts: number;
  quarantined: boolean;
}

export interface DirectiveRow {
  directiveId: number;
  cpconLevel: number;
  threat: string;
  issuer: string;
  status: string;
  actions: ActionOutcome[];
  verification: VerificationInfo | null;
  optimistic?: boolean;
}

export interface DashboardModel {
  cpconBadge: number | null;
  hosts: HostRow[];
  alerts: AlertEntry[]; // reverse-chronological
  directives: DirectiveRow[];
  recommendations: RecommendationInfo[]; // pending only
  cursor: number;
}
