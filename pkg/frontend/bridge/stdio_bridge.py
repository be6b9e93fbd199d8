"""JSON-lines stdio bridge exposing the core environment to other runtimes.

One environment instance per process.  Requests are single-line JSON
objects {"id", "method", "params"}; responses are {"id", "result"} or
{"id", "error": {"type", "message"}}.  Floats cross the boundary as JSON
numbers, which round-trip float64 exactly.
"""

import json
import sys

from skirmish.env import SkirmishEnv
from skirmish.errors import SkirmishError


class _Bridge:
    def __init__(self):
        self.env = None

    def _require_env(self) -> SkirmishEnv:
        if self.env is None:
            raise SkirmishError("no environment: call make first")
        return self.env

    def make(self, params):
        overrides = params.get("overrides") or {}
        allowed = {"sight_range", "targeting_range"}
        unknown = set(overrides) - allowed
        if unknown:
            raise SkirmishError(f"unknown overrides: {sorted(unknown)}")
        self.env = SkirmishEnv(params["scenario"], seed=params.get("seed", 0),
                               **overrides)
        return self.env.get_env_info()

    def reset(self, params):
        obs, state = self._require_env().reset(params.get("seed"))
        return {"obs": [o.tolist() for o in obs], "state": state.tolist()}

    def step(self, params):
        reward, terminated, info = self._require_env().step(params["actions"])
        return {"reward": reward, "terminated": terminated, "info": info}

    def get_obs(self, params):
        return [o.tolist() for o in self._require_env().get_obs()]

    def get_obs_agent(self, params):
        return self._require_env().get_obs_agent(params["agent_id"]).tolist()

    def get_state(self, params):
        return self._require_env().get_state().tolist()

    def get_avail_actions(self, params):
        return self._require_env().get_avail_actions()

    def get_avail_agent_actions(self, params):
        return self._require_env().get_avail_agent_actions(params["agent_id"])

    def get_env_info(self, params):
        return self._require_env().get_env_info()

    def close(self, params):
        if self.env is not None:
            self.env.close()
            self.env = None
        return {"ok": True}


def main() -> None:
    bridge = _Bridge()
    out = sys.stdout
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        rid = request.get("id")
        method = request.get("method", "")
        handler = getattr(bridge, method, None)
        if handler is None or method.startswith("_"):
            response = {"id": rid, "error": {"type": "UnknownMethod",
                                             "message": method}}
        else:
            try:
                response = {"id": rid, "result": handler(request.get("params", {}))}
            except SkirmishError as exc:
                response = {"id": rid,
                            "error": {"type": type(exc).__name__,
                                      "message": str(exc)}}
        out.write(json.dumps(response) + "\n")
        out.flush()
        if method == "close":
            break


if __name__ == "__main__":
    main()
