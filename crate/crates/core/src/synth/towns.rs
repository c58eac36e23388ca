//! Municipalities used by the generators, roughly ordered by how often
//! they appear in conflict reporting.

use crate::geocode::DepartmentTable;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Town {
    pub name: &'static str,
    pub department: &'static str,
    pub latitude: f64,
    pub longitude: f64,
}

const fn t(name: &'static str, department: &'static str, latitude: f64, longitude: f64) -> Town {
    Town {
        name,
        department,
        latitude,
        longitude,
    }
}

pub const TOWNS: [Town; 66] = [
    t("Tumaco", "Nariño", 1.7986, -78.7639),
    t("San Vicente del Caguán", "Caquetá", 2.1153, -74.7700),
    t("Tibú", "Norte de Santander", 8.6390, -72.7353),
    t("Barrancabermeja", "Santander", 7.0653, -73.8547),
    t("Toribío", "Cauca", 2.9531, -76.2686),
    t("Buenaventura", "Valle del Cauca", 3.8801, -77.0312),
    t("Tame", "Arauca", 6.4600, -71.7300),
    t("Puerto Asís", "Putumayo", 0.5050, -76.4950),
    t("Segovia", "Antioquia", 7.0797, -74.7017),
    t("Tierralta", "Córdoba", 8.1726, -76.0593),
    t("Apartadó", "Antioquia", 7.8829, -76.6258),
    t("Saravena", "Arauca", 6.9531, -71.8766),
    t("La Macarena", "Meta", 2.1833, -73.7847),
    t("Tarazá", "Antioquia", 7.5813, -75.4006),
    t("El Tarra", "Norte de Santander", 8.5755, -73.0946),
    t("Barbacoas", "Nariño", 1.6717, -78.1394),
    t("Argelia", "Cauca", 2.2569, -77.2483),
    t("Planadas", "Tolima", 3.1964, -75.6447),
    t("Cartagena del Chairá", "Caquetá", 1.3349, -74.8441),
    t("Orito", "Putumayo", 0.6669, -76.8722),
    t("San Pablo", "Bolívar", 7.4761, -73.9244),
    t("Ituango", "Antioquia", 7.1714, -75.7647),
    t("Caldono", "Cauca", 2.7983, -76.4839),
    t("El Tambo", "Cauca", 2.4522, -76.8103),
    t("Riosucio", "Chocó", 7.4400, -77.1170),
    t("Puerto Libertador", "Córdoba", 7.8881, -75.6717),
    t("Vista Hermosa", "Meta", 3.1247, -73.7514),
    t("Mesetas", "Meta", 3.3781, -74.0444),
    t("Puerto Rico", "Meta", 2.9383, -73.2083),
    t("Remedios", "Antioquia", 7.0292, -74.6936),
    t("Cáceres", "Antioquia", 7.5786, -75.3522),
    t("Turbo", "Antioquia", 8.0926, -76.7282),
    t("Ocaña", "Norte de Santander", 8.2378, -73.3560),
    t("Algeciras", "Huila", 2.5219, -75.3153),
    t("Chaparral", "Tolima", 3.7236, -75.4847),
    t("Samaná", "Caldas", 5.4133, -74.9922),
    t("El Carmen de Bolívar", "Bolívar", 9.7174, -75.1202),
    t("Santa Rosa del Sur", "Bolívar", 7.9633, -74.0528),
    t("Ovejas", "Sucre", 9.5264, -75.2267),
    t("San José del Guaviare", "Guaviare", 2.5729, -72.6459),
    t("Jamundí", "Valle del Cauca", 3.2608, -76.5400),
    t("Valle del Guamuez", "Putumayo", 0.4236, -76.9047),
    t("San Vicente de Chucurí", "Santander", 6.8817, -73.4103),
    t("Viotá", "Cundinamarca", 4.4375, -74.5222),
    t("Cúcuta", "Norte de Santander", 7.8939, -72.5078),
    t("Medellín", "Antioquia", 6.2442, -75.5812),
    t("Cali", "Valle del Cauca", 3.4516, -76.5320),
    t("Florencia", "Caquetá", 1.6144, -75.6062),
    t("Arauca", "Arauca", 7.0847, -70.7591),
    t("Mocoa", "Putumayo", 1.1522, -76.6481),
    t("Pasto", "Nariño", 1.2136, -77.2811),
    t("Popayán", "Cauca", 2.4448, -76.6147),
    t("Quibdó", "Chocó", 5.6947, -76.6611),
    t("Montería", "Córdoba", 8.7479, -75.8814),
    t("Sincelejo", "Sucre", 9.3047, -75.3978),
    t("Valledupar", "Cesar", 10.4631, -73.2532),
    t("Santa Marta", "Magdalena", 11.2408, -74.1990),
    t("Ciénaga", "Magdalena", 11.0067, -74.2500),
    t("Riohacha", "La Guajira", 11.5444, -72.9072),
    t("Villavicencio", "Meta", 4.1420, -73.6266),
    t("Yopal", "Casanare", 5.3378, -72.3959),
    t("Neiva", "Huila", 2.9273, -75.2819),
    t("Ibagué", "Tolima", 4.4389, -75.2322),
    t("Bucaramanga", "Santander", 7.1193, -73.1227),
    t("Manizales", "Caldas", 5.0703, -75.5138),
    t("Bogotá", "Bogotá D.C.", 4.7110, -74.0721),
];

/// Gazetteer CSV (`query,lat,lon,name,department`) covering every town,
/// keyed both by the bare name and by "name, department", plus one row per
/// department at its centroid. Town names shadow department names.
pub fn gazetteer_csv() -> String {
    let mut out = String::from("query,lat,lon,name,department\n");
    for town in &TOWNS {
        for query in [town.name.to_string(), format!("{}, {}", town.name, town.department)] {
            out.push_str(&format!(
                "\"{query}\",{},{},\"{}, {}\",{}\n",
                town.latitude, town.longitude, town.name, town.department, town.department
            ));
        }
    }
    // towns first: the gazetteer keeps the first row per query (Arauca)
    for (dep, lat, lon) in DepartmentTable::bundled().centroids() {
        out.push_str(&format!("\"{dep}\",{lat},{lon},\"{dep}\",{dep}\n"));
    }
    out
}
