"""Replays a recorded action trace directly against the core environment.

Reads {"scenario", "seed", "actions": [[...], ...]} from stdin and emits
the same fields the wrapper collects, for bit-exact comparison.
"""

import json
import sys

from skirmish.env import SkirmishEnv


def main() -> None:
    request = json.load(sys.stdin)
    env = SkirmishEnv(request["scenario"], seed=request["seed"])
    obs, state = env.reset(request["seed"])
    out = {
        "env_info": env.get_env_info(),
        "reset": {"obs": [o.tolist() for o in obs], "state": state.tolist()},
        "steps": [],
    }
    for actions in request["actions"]:
        masks = env.get_avail_actions()
        reward, terminated, info = env.step(actions)
        out["steps"].append({
            "masks": masks,
            "actions": actions,
            "reward": reward,
            "terminated": terminated,
            "info": info,
            "obs": [o.tolist() for o in env.get_obs()],
            "state": env.get_state().tolist(),
        })
        if terminated:
            break
    json.dump(out, sys.stdout)


if __name__ == "__main__":
    main()
