"""The HTTP service and the segmenter wire protocol.

The engine can run as a service (``seg serve``) for the browser UI, and it
talks to out-of-process 2D segmenters over a one-endpoint HTTP protocol so
any promptable model server can plug in. This demo drives both in-process.
"""

import json
import tempfile

import numpy as np
from fastapi.testclient import TestClient

from polyseg import nifti
from polyseg.backends import decode_mask_reply, encode_mask_reply, flood_oracle
from polyseg.geometry import PromptPoint2D, polylines_to_json
from polyseg.phantoms import sphere_phantom, spanning_polyline
from polyseg.service import create_app

# --- the wire protocol ------------------------------------------------------
# request : {"width", "height", "pixels_b64", "positive": [[x,y],..], "negative": [..]}
# reply   : {"mask_b64": base64 of row-major bytes, 0 or 255}
image = np.zeros((32, 32), np.uint8)
image[8:24, 8:24] = 255
mask = flood_oracle(image, 128, [PromptPoint2D(x=16, y=16, label="positive")], [])
reply = encode_mask_reply(mask)
back = decode_mask_reply(reply, 32, 32)
print(f"wire round trip lossless: {np.array_equal(back.bits, mask.bits)} "
      f"({len(reply['mask_b64'])} b64 chars)")

# --- the service ------------------------------------------------------------
volume, _ = sphere_phantom(shape=(48, 48, 48), radius=15.0)
body = nifti.write_nifti_u8(
    volume.dims, volume.spacing, volume.origin, volume.direction,
    (volume.data * 255).astype(np.uint8),
)

app = create_app(tempfile.mkdtemp())
with TestClient(app) as client:
    sid = client.post("/api/volumes", content=body).json()["id"]
    print(f"\nuploaded volume -> session {sid}")

    prompts = [spanning_polyline([23.5] * 3, (15, 15, 15))]
    client.put(f"/api/sessions/{sid}/polylines", json=polylines_to_json(prompts))

    slice_reply = client.get(
        f"/api/volumes/{sid}/slice", params={"axis_id": 0, "index": 24, "k": 3}
    )
    meta = json.loads(slice_reply.headers["X-Frame-Meta"])
    print(f"slice 24 of axis 0: {meta['width']}x{meta['height']} px PNG "
          f"({len(slice_reply.content)} bytes)")

    job_id = client.post(f"/api/sessions/{sid}/segment", json={"k": 3}).json()["job_id"]
    while True:
        job = client.get(f"/api/jobs/{job_id}").json()
        if job["state"] in ("done", "failed"):
            break
    print(f"job {job['state']}: {job['stats']['tasks_total']} tasks, "
          f"mask voxels {job['stats']['mask_voxels']}")

    mask_bytes = client.get(f"/api/sessions/{sid}/mask").content
    stl_bytes = client.get(f"/api/sessions/{sid}/mesh").content
    print(f"downloads: mask {len(mask_bytes)} bytes (NIfTI), mesh {len(stl_bytes)} bytes (STL)")
