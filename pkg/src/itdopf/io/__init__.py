from .boundary import parse_boundary_json, write_boundary_json
from .canonical import dump_network
from .distribution import parse_distribution_json, write_distribution_json
from .matpower import parse_matpower, write_matpower
from .results import parse_result_json, write_result_json

__all__ = [
    "dump_network",
    "parse_boundary_json",
    "parse_distribution_json",
    "parse_matpower",
    "parse_result_json",
    "write_boundary_json",
    "write_distribution_json",
    "write_matpower",
    "write_result_json",
]
