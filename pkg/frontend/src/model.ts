// The dashboard read model.
//
// Built exclusively from /api/state snapshots and /api/stream frames; the
// client invents no state of its own. Folding every stream frame from an
// empty model converges to the model built from one terminal snapshot,
// which is what keeps reconnects and resyncs safe.

import type {
  AlertEntry,
  AuditFrame,
  DashboardModel,
  DirectiveRow,
  HostRow,
  RecommendationInfo,
  RecordSummary,
  Snapshot,
} from "./types.js";

export class SchemaMismatchError extends Error {}

export function emptyModel(): DashboardModel {
  return {
    cpconBadge: null,
    hosts: [],
    alerts: [],
    directives: [],
    recommendations: [],
    cursor: 0,
  };
}

function requireKeys(obj: Record<string, unknown>, keys: string[], where: string): void {
  for (const key of keys) {
    if (!(key in obj)) {
      throw new SchemaMismatchError(`${where} is missing "${key}"`);
    }
  }
}

export function fromSnapshot(snapshot: Snapshot): DashboardModel {
  requireKeys(snapshot as unknown as Record<string, unknown>, [
    "cpcon_level",
    "hosts",
    "directives",
    "pending_recommendations",
    "events",
    "version",
  ], "snapshot");
  const hosts: HostRow[] = snapshot.hosts.map((h) => ({
    hostId: h.host_id,
    name: h.name,
    subnet: h.subnet,
    status: h.status,
    modules: [...h.modules].sort(),
    prebuilt: [...h.prebuilt].sort(),
    isolated: h.isolated,
  }));
  hosts.sort((a, b) => a.hostId - b.hostId);
  const alerts: AlertEntry[] = snapshot.events
    .map((e) => ({
      eventId: e.event_id,
      hostId: e.event.alert.host_id,
      eventType: e.event.alert.event_type,
      cpconLevel: e.event.cpcon_level,
      actionsTaken: [...e.event.actions_taken],
      ts: e.received_at,
      quarantined: e.quarantined,
    }))
    .reverse();
  return {
    cpconBadge: snapshot.cpcon_level,
    hosts,
    alerts,
    directives: snapshot.directives.map(directiveRow),
    recommendations: snapshot.pending_recommendations.map((r) => ({ ...r })),
    cursor: snapshot.version,
  };
}

function directiveRow(summary: RecordSummary): DirectiveRow {
  return {
    directiveId: summary.directive_id,
    cpconLevel: summary.cpcon_level,
    threat: summary.threat,
    issuer: summary.issuer,
    status: summary.status,
    actions: summary.actions.map((a) => ({ ...a })),
    verification: summary.verification,
  };
}

function upsertHost(model: DashboardModel, row: HostRow): void {
  const index = model.hosts.findIndex((h) => h.hostId === row.hostId);
  if (index >= 0) {
    model.hosts[index] = row;
  } else {
    model.hosts.push(row);
    model.hosts.sort((a, b) => a.hostId - b.hostId);
  }
}

function hostById(model: DashboardModel, hostId: number): HostRow | undefined {
  return model.hosts.find((h) => h.hostId === hostId);
}

function upsertDirective(model: DashboardModel, row: DirectiveRow): void {
  const index = model.directives.findIndex((d) => d.directiveId === row.directiveId);
  if (index >= 0) {
    model.directives[index] = row;
  } else {
    model.directives.push(row);
    model.directives.sort((a, b) => a.directiveId - b.directiveId);
  }
}

function prependAlert(model: DashboardModel, frame: AuditFrame, quarantined: boolean): void {
  const payload = frame.payload as {
    event_id: number;
    event: SnapshotEventShape;
  };
  model.alerts.unshift({
    eventId: payload.event_id,
    hostId: payload.event.alert.host_id,
    eventType: payload.event.alert.event_type,
    cpconLevel: payload.event.cpcon_level,
    actionsTaken: [...payload.event.actions_taken],
    ts: frame.ts,
    quarantined,
  });
}

interface SnapshotEventShape {
  alert: { host_id: number; event_type: string; observed_at: number };
  cpcon_level: number;
  actions_taken: string[];
}

/**
 * Fold one stream frame into the model. Frames at or below the cursor are
 * replays and are ignored, so reconnect overlap is harmless.
 */
export function applyFrame(model: DashboardModel, frame: AuditFrame): DashboardModel {
  if (frame.seq <= model.cursor) {
    return model;
  }
  model.cursor = frame.seq;
  const payload = frame.payload as Record<string, any>;
  switch (frame.kind) {
    case "agent_registered":
      upsertHost(model, {
        hostId: payload.host_id,
        name: payload.name,
        subnet: payload.subnet,
        status: "connected",
        modules: [],
        prebuilt: [],
        isolated: false,
      });
      break;
    case "module_deployed": {
      const host = hostById(model, payload.host_id);
      if (host) {
        if (!host.modules.includes(payload.kind)) {
          host.modules = [...host.modules, payload.kind].sort();
        }
        if (payload.kind === "isolate") {
          host.isolated = true;
        }
      }
      break;
    }
    case "module_prebuilt": {
      const host = hostById(model, payload.host_id);
      if (host && !host.prebuilt.includes(payload.kind)) {
        host.prebuilt = [...host.prebuilt, payload.kind].sort();
      }
      break;
    }
    case "event_ingested":
      prependAlert(model, frame, false);
      break;
    case "event_quarantined":
      prependAlert(model, frame, true);
      break;
    case "directive_received":
    case "directive_executing":
    case "directive_implemented":
    case "directive_verified":
    case "directive_failed":
      upsertDirective(model, directiveRow(payload.record as RecordSummary));
      if (typeof payload.cpcon_level === "number") {
        model.cpconBadge = payload.cpcon_level;
      }
      break;
    case "level_changed":
      model.cpconBadge = payload.cpcon_level;
      break;
    case "recommendation_created":
      model.recommendations.push({ ...(payload as RecommendationInfo) });
      model.recommendations.sort((a, b) => a.rec_id - b.rec_id);
      break;
    case "recommendation_approved":
    case "recommendation_dismissed":
      model.recommendations = model.recommendations.filter(
        (r) => r.rec_id !== payload.rec_id,
      );
      break;
    default:
      // enforcement/rule/scan chatter carries no dashboard state
      break;
  }
  return model;
}

export function applyFrames(model: DashboardModel, frames: AuditFrame[]): DashboardModel {
  for (const frame of frames) {
    applyFrame(model, frame);
  }
  return model;
}

/** Insert an optimistic row for a just-submitted directive (reconciled by upsert). */
export function addOptimisticDirective(
  model: DashboardModel,
  directiveId: number,
  cpconLevel: number,
  threat: string,
): void {
  if (!model.directives.some((d) => d.directiveId === directiveId)) {
    upsertDirective(model, {
      directiveId,
      cpconLevel,
      threat,
      issuer: "operator",
      status: "executing",
      actions: [],
      verification: null,
      optimistic: true,
    });
  }
}

/** Canonical comparison form: two converged models serialize identically. */
export function canonical(model: DashboardModel): string {
  return JSON.stringify({
    cpconBadge: model.cpconBadge,
    hosts: model.hosts,
    alerts: model.alerts,
    directives: model.directives.map(({ optimistic, ...rest }) => rest),
    recommendations: model.recommendations,
    cursor: model.cursor,
  });
}
