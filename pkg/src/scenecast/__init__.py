"""scenecast: a headless live video compositing and streaming engine.

Scenes compose heterogeneous sources (images, video clips, synthetic
patterns, text, capture stubs) onto an output canvas; live operations
(scene switching, visibility, pan/zoom, scribble annotation) mutate the
composition between frames; output is recorded to FLV and/or published
over RTMP. Session scripts replay entire sessions deterministically.
"""

from .annotation import AnnotationLayer, Stroke
from .compositor import RenderSnapshot, alpha_over, map_dest_to_source, render
from .engine import Engine
from .flv import FlvTag, FlvWriter, mux_session
from .ingest import IngestServer
from .model import (
    Document,
    EngineState,
    ModelError,
    OutputConfig,
    Scene,
    SourceDescriptor,
    SourcePlacement,
    Transform,
    Viewport,
)
from .raster import FrameBuffer
from .rtmp import PublishSession, parse_rtmp_url, publish
from .script import SessionScript, load_script, run_script
from .server import ControlServer
from .sources import PatternSpec, load_image, open_source, open_video

__version__ = "0.1.0"

__all__ = [
    "AnnotationLayer",
    "ControlServer",
    "Document",
    "Engine",
    "EngineState",
    "FlvTag",
    "FlvWriter",
    "FrameBuffer",
    "IngestServer",
    "ModelError",
    "OutputConfig",
    "PatternSpec",
    "PublishSession",
    "RenderSnapshot",
    "Scene",
    "SessionScript",
    "SourceDescriptor",
    "SourcePlacement",
    "Stroke",
    "Transform",
    "Viewport",
    "alpha_over",
    "load_image",
    "load_script",
    "map_dest_to_source",
    "mux_session",
    "open_source",
    "open_video",
    "parse_rtmp_url",
    "publish",
    "render",
    "run_script",
]
