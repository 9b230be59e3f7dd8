//! IRIs of the vocabulary used throughout the graph.
//!
//! Everything lives under short prefixes (`rdf:`, `rdfs:`, `owl:`, `xsd:`,
//! `da:`); the store never expands them.

pub const RDF_TYPE: &str = "rdf:type";
pub const RDF_PROPERTY: &str = "rdf:Property";
pub const RDFS_CLASS: &str = "rdfs:Class";
pub const RDFS_SUBCLASS_OF: &str = "rdfs:subClassOf";
pub const RDFS_DOMAIN: &str = "rdfs:domain";
pub const RDFS_RANGE: &str = "rdfs:range";
pub const OWL_FUNCTIONAL: &str = "owl:FunctionalProperty";

pub const PREFIX: &str = "da:";

/// Builds an IRI in the data-analytics namespace.
pub fn da(local: &str) -> String {
    format!("{PREFIX}{local}")
}

/// Strips the namespace prefix for display.
pub fn local_name(iri: &str) -> &str {
    iri.rsplit_once(':').map_or(iri, |(_, l)| l)
}

pub mod class {
    pub const TASK: &str = "da:Task";
    pub const USER: &str = "da:User";
    pub const INTENT: &str = "da:Intent";
    pub const ML_TASK: &str = "da:MLTask";
    pub const WORKFLOW: &str = "da:Workflow";
    pub const DATASET: &str = "da:Dataset";
    pub const STEP: &str = "da:Step";
    pub const ALGORITHM: &str = "da:Algorithm";
    pub const MODELING_ALGORITHM: &str = "da:ModelingAlgorithm";
    pub const PREPROCESSING_ALGORITHM: &str = "da:PreprocessingAlgorithm";
    pub const IMPLEMENTATION: &str = "da:Implementation";
    pub const HYPERPARAMETER: &str = "da:Hyperparameter";
    pub const CONSTRAINT: &str = "da:Constraint";
    pub const ALGORITHM_CONSTRAINT: &str = "da:AlgorithmConstraint";
    pub const HYPERPARAMETER_CONSTRAINT: &str = "da:HyperparameterConstraint";
    pub const WORKFLOW_CONSTRAINT: &str = "da:WorkflowConstraint";
    pub const EVALUATION_REQUIREMENT: &str = "da:EvaluationRequirement";
    pub const MODEL_EVALUATION: &str = "da:ModelEvaluation";
    pub const FEEDBACK: &str = "da:Feedback";
    pub const DATASET_CHARACTERISTICS: &str = "da:DatasetCharacteristics";
}

pub mod prop {
    pub const HAS_INTENT: &str = "da:hasIntent";
    pub const HAS_CONSTRAINT: &str = "da:hasConstraint";
    pub const HAS_REQUIREMENT: &str = "da:hasRequirement";
    pub const REQUESTED_BY: &str = "da:requestedBy";
    pub const ACHIEVED_BY: &str = "da:achievedBy";
    pub const USES_DATASET: &str = "da:usesDataset";
    pub const HAS_STEP: &str = "da:hasStep";
    pub const FOLLOWED_BY: &str = "da:followedBy";
    pub const HAS_FEEDBACK: &str = "da:hasFeedback";
    pub const HAS_EVALUATION: &str = "da:hasEvaluation";
    pub const IS_HARD: &str = "da:isHard";
    pub const HAS_HYPERPARAMETER: &str = "da:hasHyperparameter";
    pub const USES_ALGORITHM: &str = "da:usesAlgorithm";
    pub const HAS_CHARACTERISTIC: &str = "da:hasCharacteristic";

    // intent hierarchy
    pub const REFINES_INTENT: &str = "da:refinesIntent";
    pub const ADDRESSES_TASK: &str = "da:addressesTask";
    pub const IMPLEMENTS: &str = "da:implementsAlgorithm";
    pub const METRIC_FOR: &str = "da:metricFor";

    // constraint details
    pub const ON_ALGORITHM: &str = "da:onAlgorithm";
    pub const CONSTRAINT_ACTION: &str = "da:constraintAction";
    pub const ON_HYPERPARAMETER: &str = "da:onHyperparameter";
    pub const COMPARATOR: &str = "da:comparator";
    pub const CONSTRAINT_VALUE: &str = "da:constraintValue";
    pub const RESOURCE_KEY: &str = "da:resourceKey";
    pub const RESOURCE_LIMIT: &str = "da:resourceLimit";

    // evaluation and feedback
    pub const SPECIFIED_METRIC: &str = "da:specifiedMetric";
    pub const EVALUATION_VALUE: &str = "da:evaluationValue";
    pub const FEEDBACK_SCORE: &str = "da:feedbackScore";
    pub const FEEDBACK_TAG: &str = "da:feedbackTag";

    // user and algorithm annotations
    pub const HAS_EXPERTISE: &str = "da:hasExpertise";
    pub const DEFAULT_VALUE: &str = "da:defaultValue";
    pub const HANDLES_CATEGORICAL: &str = "da:handlesCategoricalFeatures";
    pub const TOLERATES_MISSING: &str = "da:toleratesMissingValues";

    // dataset characteristics
    pub const DATASET_NAME: &str = "da:datasetName";
    pub const N_INSTANCES: &str = "da:numberOfInstances";
    pub const N_FEATURES: &str = "da:numberOfFeatures";
    pub const N_NUMERIC: &str = "da:numberOfNumericFeatures";
    pub const N_CATEGORICAL: &str = "da:numberOfCategoricalFeatures";
    pub const PCT_MISSING: &str = "da:percentageOfMissingValues";
    pub const N_CLASSES: &str = "da:numberOfClasses";
    pub const IMBALANCE: &str = "da:targetImbalance";
    pub const STD_TARGET: &str = "da:targetStd";
    pub const TARGET_TYPE: &str = "da:targetType";
}
