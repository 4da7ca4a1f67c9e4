"""Systems under test: the adapter interface and the built-in engines."""

from vizbench.adapters.base import AdapterCapabilities, QueryRequest, SystemAdapter
from vizbench.adapters.columnar import BinAccumulator, ColumnarTable, exact_result
from vizbench.adapters.exact import ExactEngine
from vizbench.adapters.progressive import ProgressiveEngine, z_value
from vizbench.adapters.registry import get_adapter
from vizbench.adapters.subprocess_bridge import SubprocessAdapter, parse_result
