from .harvester import HarvestJob, HarvestSummary, RetryPolicy, harvest, harvest_many, search_page
from .models import SceneRecord, item_to_record
from .store import SceneStore

__all__ = ["HarvestJob", "HarvestSummary", "RetryPolicy", "SceneRecord", "SceneStore",
           "harvest", "harvest_many", "item_to_record", "search_page"]
