pub mod blocks;
pub mod cech;
pub mod certify;
pub mod collections;
pub mod facts;
pub mod intmat;
pub mod io;
pub mod ktheory;
pub mod pipeline;
pub mod properties;
pub mod series;
pub mod toric;
