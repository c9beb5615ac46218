#!/usr/bin/env python3
"""Build a self-contained demo study from the bundled fixture meshes.

Writes a dataset directory, a prompt manifest, and a study TOML, then prints
the run-study invocation. No external data needed.
"""
import argparse
from pathlib import Path

from propshape.fixtures import study_fixtures
from propshape.meshio import save_mesh
from propshape.prompts import PromptSpec, TemplateKind, save_prompt_set


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=Path, default=Path("demo-study"))
    parser.add_argument("--seed", type=int, default=2025)
    parser.add_argument("--samples", type=int, default=10_000)
    parser.add_argument("--resolution", type=int, default=256)
    args = parser.parse_args()

    data = args.out / "dataset"
    data.mkdir(parents=True, exist_ok=True)
    fixtures = study_fixtures()
    for name, mesh in fixtures.items():
        save_mesh(mesh, data / f"{name}.obj")

    prompts = [
        PromptSpec(text="toy robot", kind=TemplateKind.NOUN,
                   condition="general", object_id="*"),
        PromptSpec(text="A pink octopus", kind=TemplateKind.ADJECTIVE_NOUN,
                   condition="general", object_id="*"),
    ]
    for name in fixtures:
        prompts.append(PromptSpec(
            text=f"A shiny {name} ornament",
            kind=TemplateKind.ADJECTIVE_NOUN,
            condition="object_specific", object_id=name))
        prompts.append(PromptSpec(
            text=f"A {name} with golden stripes",
            kind=TemplateKind.NOUN_WITH_DESCRIPTION,
            condition="object_specific", object_id=name))
    save_prompt_set(prompts, args.out / "prompts.csv")

    (args.out / "study.toml").write_text(f"""\
seed = {args.seed}
samples_per_mesh = {args.samples}
dataset_dir = "dataset"
prompts = "prompts.csv"

[render]
width = {args.resolution}
height = {args.resolution}

[backend]
t2i_endpoint = "mock"
bg_removal_endpoint = "mock"
img2mesh_endpoint = "mock"

[icp]
restarts = 24
""")
    print(f"wrote {args.out}/study.toml "
          f"({len(fixtures)} objects x 4 prompts = {len(fixtures) * 4} pairs)")
    print(f"run: propshape run-study --manifest {args.out}/study.toml "
          f"--out-dir {args.out}/results --backend mock")


if __name__ == "__main__":
    main()
