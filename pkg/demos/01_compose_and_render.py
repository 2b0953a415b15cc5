#!/usr/bin/env python3
"""Compose a scene by hand and render single frames.

Walks through the core objects directly, no engine loop: open a few
sources, place them with transforms and a viewport, draw one frame, and
save it as a PPM you can open in any image viewer.

    python demos/01_compose_and_render.py out.ppm
"""

import os
import sys

from scenecast import (
    RenderSnapshot,
    Scene,
    SourcePlacement,
    Transform,
    Viewport,
    map_dest_to_source,
    open_source,
    render,
)

HERE = os.path.dirname(os.path.abspath(__file__))


def main() -> None:
    out_path = sys.argv[1] if len(sys.argv) > 1 else "composed.ppm"

    # sources produce frames on demand; frame 0 is enough for stills
    bars = open_source("pattern", {"variant": "colorbars", "width": 640, "height": 360})
    chart = open_source("image", {"path": "assets/stock_chart.ppm"}, assets_root=HERE)
    label = open_source(
        "text", {"text": "SCENE COMPOSITION DEMO", "fg": [255, 255, 255], "bg": [0, 0, 0, 150]}
    )

    # painter order: colorbars at the bottom, then the chart, then text.
    # The chart is cropped, zoomed 2x into its upper-right quadrant, and
    # rotated a touch; the label rides on top with a translucent box.
    placements = [
        SourcePlacement("bars", Transform.identity((640, 360)), z=0),
        SourcePlacement(
            "chart",
            Transform(crop=(20, 10, 230, 130), position=(140.0, 80.0),
                      scale=(1.8, 1.8), rotation=-4.0),
            viewport=Viewport(zoom=2.0, pan=(100.0, 10.0)),
            z=1,
        ),
        SourcePlacement(
            "label",
            Transform(crop=(0, 0, 199, 10), position=(110.0, 20.0), scale=(2.0, 2.0)),
            z=2,
        ),
    ]
    scene = Scene(id="demo", name="Demo", placements=placements)
    frames = {"bars": bars.frame(0), "chart": chart.frame(0), "label": label.frame(0)}
    frame = render(RenderSnapshot(scene, frames, canvas=(640, 360)))

    # the inverse mapping answers "which source pixel is under this
    # output pixel", the same question a click in a UI asks
    probe = (320, 180)
    hit = map_dest_to_source(placements[1], probe)
    print(f"output pixel {probe} samples chart pixel {hit}")

    with open(out_path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (frame.width, frame.height))
        fh.write(frame.pixels[:, :, :3].tobytes())
    print(f"wrote {frame.width}x{frame.height} frame to {out_path}")


if __name__ == "__main__":
    main()
