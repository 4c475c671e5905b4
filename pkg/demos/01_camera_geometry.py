"""Poses, pinhole projection, and the pixel/point round trip.

Builds a camera mounted on a vehicle, projects a ring of points into the
image, and back-projects them to verify the geometry closes on itself.
"""

import numpy as np

from boxlift import (CameraModel, PointCloud, Se3Pose, backproject_pixel, compose,
                     inverse, project_cloud, transform_cloud)

# A camera looking along the vehicle's forward (+x) axis. Camera frames are
# z-forward/x-right/y-down, vehicle frames x-forward/y-left/z-up.
from boxlift.geometry import quat_from_matrix

R_EGO_FROM_CAM = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
ego_from_cam = Se3Pose(quat_from_matrix(R_EGO_FROM_CAM), np.array([1.5, 0.0, 1.6]))
cam = CameraModel(fx=1266.4, fy=1266.4, cx=800.0, cy=450.0, width=1600, height=900,
                  sensor_from_reference=inverse(ego_from_cam))

print("== compose / inverse ==")
ego_from_global = Se3Pose.from_rotation_z(0.4, translation=(120.0, -30.0, 0.0))
round_trip = compose(ego_from_global, inverse(ego_from_global))
print("pose . pose^-1 translation:", np.round(round_trip.translation, 12))

print("\n== project a ring of points 15 m ahead ==")
angles = np.linspace(-0.4, 0.4, 9)
ego_points = np.column_stack([15.0 * np.cos(angles), 15.0 * np.sin(angles),
                              np.full_like(angles, 0.5)])
cam_cloud = transform_cloud(cam.sensor_from_reference, PointCloud(ego_points, frame="ego"),
                            frame="camera")
pixel_map = project_cloud(cam, cam_cloud)
print(f"{len(pixel_map)} of {len(ego_points)} points project into the image")
for uv, depth in zip(pixel_map.pixel_uv[:3], pixel_map.depth[:3]):
    print(f"  pixel ({uv[0]:7.2f}, {uv[1]:7.2f})  depth {depth:6.3f} m")

print("\n== round trip: backproject(project(p)) == p ==")
recovered = backproject_pixel(cam, pixel_map.pixel_uv[:, 0], pixel_map.pixel_uv[:, 1],
                              pixel_map.depth)
err = np.linalg.norm(recovered - cam_cloud.positions[pixel_map.source_index], axis=1)
print(f"max round-trip error: {err.max():.3e} m")
