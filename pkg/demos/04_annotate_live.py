#!/usr/bin/env python3
"""Telestrator-style annotation over a running composition.

Draws with all three tools through the command interface, renders the
touched frames, and shows how the overlay persists across a scene
switch until it is cleared. Writes before/after stills as PPM files.

    python demos/04_annotate_live.py
"""

from scenecast import Engine, OutputConfig


def save(frame, path):
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (frame.width, frame.height))
        fh.write(frame.pixels[:, :, :3].tobytes())
    print(f"wrote {path}")


def main() -> None:
    engine = Engine(OutputConfig(width=480, height=270, fps=30))
    engine.execute("create_source", {
        "id": "bars", "kind": "pattern",
        "params": {"variant": "colorbars", "width": 480, "height": 270},
    })
    engine.execute("create_source", {
        "id": "night", "kind": "pattern",
        "params": {"variant": "solid", "width": 480, "height": 270,
                   "colors": [[8, 8, 30, 255]]},
    })
    engine.execute("add_to_scene", {"scene": "default", "source": "bars"})
    engine.execute("create_scene", {"id": "dark", "name": "Dark"})
    engine.execute("add_to_scene", {"scene": "dark", "source": "night"})

    # a pen circle, then a highlighter swipe across it
    engine.execute("begin_stroke", {"tool": "pen", "color": [255, 0, 0],
                                    "width": 5, "point": [200, 100]})
    for p in ([260, 90], [300, 130], [260, 170], [200, 160], [180, 130], [200, 100]):
        engine.execute("add_point", {"point": p})
    engine.execute("end_stroke", {})
    engine.execute("begin_stroke", {"tool": "highlighter", "color": [255, 255, 0],
                                    "width": 24, "point": [60, 220]})
    engine.execute("add_point", {"point": [420, 220]})
    engine.execute("end_stroke", {})
    save(engine.tick(), "annotated_bars.ppm")

    # the eraser cuts a gap straight through both strokes
    engine.execute("begin_stroke", {"tool": "eraser", "color": [0, 0, 0],
                                    "width": 30, "point": [240, 60]})
    engine.execute("add_point", {"point": [240, 240]})
    engine.execute("end_stroke", {})
    save(engine.tick(), "annotated_erased.ppm")

    # scene switch: the overlay stays until cleared explicitly
    engine.execute("set_active_scene", {"scene": "dark"})
    save(engine.tick(), "annotated_dark_scene.ppm")
    engine.execute("clear_annotation", {})
    save(engine.tick(), "annotated_cleared.ppm")


if __name__ == "__main__":
    main()
