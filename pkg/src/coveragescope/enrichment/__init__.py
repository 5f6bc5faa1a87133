from .cloud import cloud_cover_from_response, fetch_cloud_cover
from .dataset import RegionalDataset, RegionalTable, build_regional_dataset, read_regional_table
from .gsd import GsdBin, gsd_bin
from .heatmap import HeatmapCube, heatmap
from .ratio import RatioRow, ratio_table
from .regions import Region, RegionIndex, assign_scene, load_regions

__all__ = ["GsdBin", "HeatmapCube", "RatioRow", "Region", "RegionIndex", "RegionalDataset", "RegionalTable",
           "assign_scene", "build_regional_dataset", "cloud_cover_from_response", "fetch_cloud_cover",
           "gsd_bin", "heatmap", "load_regions", "ratio_table", "read_regional_table"]
