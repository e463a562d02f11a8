from shared.scenarios import SCENARIO_CATALOG


def run(args) -> int:
    for scenario_id, info in SCENARIO_CATALOG.items():
        defaults = ", ".join(f"{k}={v:g}" for k, v in info["defaults"].items()) or "no defaults"
        print(f"{scenario_id:<24} {info['name']}: {info['description']} ({defaults})")
    return 0
