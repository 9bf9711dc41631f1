from .dataset import MAX_LEN, MIN_COUNT, PAD_ID, Catalog, Dataset, RawInteraction, Split, count_unique
from .parse import ParseReport, RawRecords, parse
from .preprocess import check_reference, preprocess, to_records
from .split import split_leave_one_out
from .batches import SequenceBatch, batch_of, make_batches, pad_left
from .synthetic import SyntheticCorpus, generate_synthetic
from .repo_dataset import DatasetRepo
