"""Generate the API reference pages."""

import mkdocs_gen_files

# Map of module paths to their corresponding documentation files
MODULE_DOCS_MAP = {
    "augmap.core.geometry": "api/geometry.md",
    "augmap.core.shape_fitting": "api/shape-fitting.md",
    "augmap.core.tracker": "api/tracker.md",
    "augmap.core.pose_graph": "api/pose-graph.md",
    "augmap.core.mapper": "api/mapper.md",
    "augmap.maps.occupancy": "api/occupancy.md",
    "augmap.maps.map_io": "api/map-io.md",
    "augmap.simulation.simulator": "api/simulator.md",
    "augmap.evaluation.metrics": "api/metrics.md",
    "augmap.evaluation.sweep": "api/sweep.md",
    "augmap.cli": "api/cli.md",
}

for module_path, doc_path in MODULE_DOCS_MAP.items():
    with mkdocs_gen_files.open(doc_path, "w") as f:
        print(f"# {module_path.split('.')[-1].replace('_', ' ').title()}", file=f)
        print(file=f)
        print(f":::{module_path}", file=f)
        print(file=f)

with mkdocs_gen_files.open("api/.pages", "w") as f:
    print("title: API Reference", file=f)
