// Mirrors of the server's session payloads. The UI never invents plans or
// state: everything rendered comes from these documents.

export type ObjectInfo = {
  id: string;
  display_name: string;
  container: boolean;
  position: number[];
};

export type FunctionInfo = {
  name: string;
  signature: string;
  doc: string;
  params: string[];
  base: boolean;
  body: string[] | null;
};

export type GripperInfo = {
  position: number[];
  open: boolean;
  holding: string | null;
};

export type WorldInfo = {
  clock: number;
  poses: Record<string, number[]>;
  inside: Record<string, string>;
  gripper: GripperInfo;
};

export type ExecutionInfo = {
  status: "pending" | "completed" | "faulted" | "skipped";
  events: { kind: string; subject: string; duration: number; fault_code: string }[];
};

export type StepInfo = {
  index: number;
  initiator: "user" | "robot-proactive";
  utterance: string | null;
  plan: string;
  plan_inlined: string;
  confirmation: "not-required" | "confirmed" | "rejected";
  execution: ExecutionInfo;
  t_start: number;
  t_end: number;
  kind: "plan" | "teach";
  annotation: string;
  world_hash: string;
};

export type MetricsInfo = {
  total_time: number;
  user_initiated: number;
  robot_initiated: number;
  robot_initiated_accepted: number;
  time_breakdown: Record<string, number>;
};

export type PendingInfo = {
  origin: "user" | "robot-proactive";
  plan: string;
  gloss: string;
} | null;

export type MessageInfo = { role: string; text: string };

export type Snapshot = {
  mode: "meta-prompting" | "live";
  state: string;
  goal: string;
  proactive: boolean;
  objects: ObjectInfo[];
  api: { functions: FunctionInfo[] };
  world: WorldInfo;
  pending: PendingInfo;
  messages: MessageInfo[];
  history: StepInfo[];
  metrics: MetricsInfo;
};

export type ServerEvent = {
  type: "state_changed" | "suggestion" | "execution_event" | "message";
  payload: Record<string, unknown>;
};

// One step row of the teach form; each argument slot is either a concrete
// object id or a "$param" reference to a declared parameter.
export type FormStep = { function: string; args: string[] };

export type TeachFormModel = {
  name: string;
  behavior: string;
  params: string[];
  steps: FormStep[];
};

export const emptyForm = (): TeachFormModel => ({
  name: "",
  behavior: "",
  params: [],
  steps: [],
});
