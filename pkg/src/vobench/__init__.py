"""vobench: benchmark characterization and evaluation workbench for VO/SLAM.

Submodules:

* ``traj_io``: trajectory parsing (TUM / KITTI / EuRoC) and association
* ``metrics``: absolute RMSE, relative pose error, run classification
* ``catalog``: sequence property taxonomy and balance statistics
* ``dtree``: categorical decision trees with cross-validated selection
* ``perfcluster``: k-means++ clustering of run outcomes into categories
* ``playback``: time-dilated frame playback with component profiling
* ``report``: per-run records and result tables
* ``refdata``: bundled reference catalog and run results
* ``cli``: the ``vobench`` command
"""

__version__ = "0.1.0"
