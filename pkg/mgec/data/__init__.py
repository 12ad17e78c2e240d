from mgec.data.dataset import Dataset, Sample
from mgec.data.synthetic import SyntheticSpec, TeacherRecord, generate_synthetic
from mgec.data.augment import AugmentSpec, apply_mask, retrieve_neighbor
from mgec.data.LoadData import LoadData, load_dataset, save_dataset
