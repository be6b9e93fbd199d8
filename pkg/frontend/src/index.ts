export {
  EnvClosedError,
  EnvError,
  UnavailableActionError,
  WrappedEnv,
  type EnvInfo,
  type EnvOverrides,
  type MakeOptions,
  type ResetResult,
  type StepResult,
} from "./wrappedEnv.js";
